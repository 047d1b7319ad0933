//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --release -p netcorrupt --test acceptance`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;

use netcorrupt::corruption::{
    analytic_corruption, apply_corruption, channel_autocorr, check_gen_lyapunov, corrupted_psd, delta_u_autocorr,
    lower_to_state_space, mean_tf, packet_delta_autocorr, packet_mean_autocorr, packet_theta_lag, theta_spectrum,
    AutocorrOptions, CorruptionModel, Thetas,
};
use netcorrupt::dim_sim::{analytic_psd, grid, simulate_dim, DimSystem, NoiseSpec, TimeSeriesPanel, TransferFunction};
use netcorrupt::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use netcorrupt::graphs::{edge, moral_graph, perturbed_graph, DirectedGraph, Edge, NodeSet, UndirectedGraph};
use netcorrupt::linalg::RMatrix;
use netcorrupt::mrf::verify_gaussian;
use netcorrupt::mrf::verify_pairwise_markov;
use netcorrupt::predict::{exact_support, predict_spurious, woodbury_sequence};
use netcorrupt::random::{
    derive_seed, random_assignment, random_dag_system, random_discrete_mrf, random_gaussian_model,
    random_gaussian_perturbations, random_perturb_factors, random_subset, rng_for,
};
use netcorrupt::spectral::{average_spectra, coherence, estimate_cross_psd, WelchConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn config(name: &str) -> ExperimentConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn edges(labels: &[(usize, usize)]) -> BTreeSet<Edge> {
    labels.iter().map(|&(a, b)| edge(a - 1, b - 1)).collect()
}

fn within(limit: Duration, t: Instant) -> Result<(), String> {
    if t.elapsed() > limit {
        Err(format!("took {:.1?}, limit {limit:?}", t.elapsed()))
    } else {
        Ok(())
    }
}

fn run_cfg(name: &str) -> Result<ExperimentReport, String> {
    run_experiment(&config(name)).map_err(|e| e.to_string())
}

fn c1_star_leaf() -> Outcome {
    let t = Instant::now();
    let r = run_cfg("star_leaf.cfg")?;
    let want = edges(&[(1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7)]);
    if r.recovered.edge_set() != &want {
        return Err(format!("recovered {:?}", r.recovered.edge_set()));
    }
    within(Duration::from_secs(120), t)?;
    Ok(format!("star moral edges only, {:.1?}", t.elapsed()))
}

fn c2_star_hub() -> Outcome {
    let t = Instant::now();
    let r = run_cfg("star_hub.cfg")?;
    if r.recovered != UndirectedGraph::complete(7) {
        return Err(format!("recovered {:?}", r.recovered.edge_set()));
    }
    let added: BTreeSet<Edge> = r.recovered.edge_set().difference(r.prediction.true_moral.edge_set()).copied().collect();
    if added.len() != 15 || !added.is_subset(&r.prediction.admissible_spurious) {
        return Err(format!("added {added:?} not all admissible"));
    }
    Ok(format!("complete K7, 15 spurious edges all admissible, {:.1?}", t.elapsed()))
}

fn c3_chain() -> Outcome {
    let t = Instant::now();
    let r = run_cfg("chain.cfg")?;
    let want = edges(&[(1, 2), (2, 3), (3, 4), (4, 5), (1, 3), (1, 4), (2, 4)]);
    if r.recovered.edge_set() != &want {
        return Err(format!("recovered {:?}", r.recovered.edge_set()));
    }
    if r.recovered.neighbors(4) != vec![3] {
        return Err("new edge at node 5".into());
    }
    within(Duration::from_secs(120), t)?;
    Ok(format!("chain + {{1,3}},{{1,4}},{{2,4}}, {:.1?}", t.elapsed()))
}

fn ar1_system(a: f64) -> DimSystem {
    let mut sys = DimSystem::new(1);
    let shaping = TransferFunction::new(vec![1.0], vec![1.0, -a]).unwrap();
    sys.set_noise(0, NoiseSpec::colored(1.0, shaping)).unwrap();
    sys
}

fn variants() -> Vec<(&'static str, CorruptionModel)> {
    vec![
        ("random delay", CorruptionModel::delay(&[(1, 0.6), (3, 0.4)])),
        ("packet drop", CorruptionModel::PacketDrop { p: 0.6 }),
        ("measurement noise", CorruptionModel::MeasurementNoise { variance: 0.5, shaping: None }),
        (
            "colored noise",
            CorruptionModel::MeasurementNoise {
                variance: 0.3,
                shaping: Some(TransferFunction::new(vec![1.0], vec![1.0, 0.6]).unwrap()),
            },
        ),
        ("disinformation", CorruptionModel::Disinformation { variance: 1.0, shaping: None }),
    ]
}

fn c4_corrupted_spectra() -> Outcome {
    let sys = ar1_system(0.5);
    let (t_len, trials, burn) = (100_000usize, 100u64, 1000usize);
    let welch = WelchConfig::default();
    let freqs = welch.freqs();
    let r = channel_autocorr(&sys, 0, AutocorrOptions::default()).map_err(|e| e.to_string())?;
    let mut worst_diag: f64 = 0.0;
    let mut worst_coh: f64 = 0.0;
    for (name, m) in variants() {
        let per_trial: Vec<_> = (0..trials)
            .map(|k| {
                let y = simulate_dim(&sys, t_len + burn, derive_seed(4, k, 0), burn).unwrap();
                let u = apply_corruption(&m, y.channel(0), derive_seed(4, k, 1)).unwrap();
                let panel = TimeSeriesPanel::from_channels(vec![
                    y.channel(0)[burn..].to_vec(),
                    u[burn..].to_vec(),
                ])
                .unwrap();
                estimate_cross_psd(&panel, &welch).unwrap()
            })
            .collect();
        let est = average_spectra(&per_trial).map_err(|e| e.to_string())?;
        let coh = coherence(&est);
        let h = mean_tf(&m).map_err(|e| e.to_string())?;
        let theta = theta_spectrum(&m, &r, &freqs).map_err(|e| e.to_string())?;
        for (k, &w) in freqs.iter().enumerate() {
            let phi = sys.noise_psd(w).unwrap()[0];
            let hw = h.eval(w).unwrap();
            let uu = hw.norm_sqr() * phi + theta[k];
            let uy = hw * phi;
            let c = if uu > 0.0 { uy.norm_sqr() / (uu * phi) } else { 0.0 };
            let e_yy = (est.values[k][(0, 0)].re / phi - 1.0).abs();
            let e_uu = (est.values[k][(1, 1)].re / uu - 1.0).abs();
            let e_c = (coh[k][(0, 1)] - c).abs();
            worst_diag = worst_diag.max(e_yy).max(e_uu);
            worst_coh = worst_coh.max(e_c);
            if e_yy >= 0.10 || e_uu >= 0.10 || e_c >= 0.05 {
                return Err(format!(
                    "{name} at w={w:.4}: diag errors {e_yy:.3}/{e_uu:.3}, coherence error {e_c:.3}"
                ));
            }
        }
    }
    Ok(format!("5 variants; worst diagonal rel. error {worst_diag:.3}, worst coherence error {worst_coh:.3}"))
}

fn c5_packet_closed_forms() -> Outcome {
    let a: f64 = 0.7;
    let r: Vec<f64> = (0..400).map(|k| a.powi(k) / (1.0 - a * a)).collect();
    let mut worst: f64 = 0.0;
    for p in [0.25, 0.5, 0.9] {
        for t in -30i64..=30 {
            let lhs = packet_mean_autocorr(&r, p, t) + packet_theta_lag(&r, p, t);
            let rhs = packet_delta_autocorr(&r, p, t);
            worst = worst.max((lhs - rhs).abs());
        }
        let ss = lower_to_state_space(&CorruptionModel::PacketDrop { p }).map_err(|e| e.to_string())?;
        for q in [0.3, 1.0, 7.5] {
            let qm = RMatrix::from_element(1, 1, q);
            let sol = check_gen_lyapunov(&ss, &qm).map_err(|e| e.to_string())?;
            if (sol[(0, 0)] - q / p).abs() > 1e-10 {
                return Err(format!("Lyapunov P = {} vs Q/p = {}", sol[(0, 0)], q / p));
            }
        }
    }
    if worst > 1e-6 {
        return Err(format!("lag identity off by {worst:e}"));
    }
    Ok(format!("mean + theta = delta to {worst:.1e}; P = Q/p to 1e-10"))
}

fn autocorr_batches(x: &[f64], lag: usize, batches: usize) -> (f64, f64) {
    let len = x.len() / batches;
    let vals: Vec<f64> = (0..batches)
        .map(|b| {
            let s = &x[b * len..(b + 1) * len];
            (0..len - lag).map(|t| s[t + lag] * s[t]).sum::<f64>() / (len - lag) as f64
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / batches as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

fn c6_deviation_autocorr() -> Outcome {
    let sys = ar1_system(0.5);
    let r = channel_autocorr(&sys, 0, AutocorrOptions::default()).map_err(|e| e.to_string())?;
    let (n, burn) = (100_000usize, 2000usize);
    let mut worst: f64 = 0.0;
    for (name, m) in [
        ("packet drop", CorruptionModel::PacketDrop { p: 0.4 }),
        ("random delay", CorruptionModel::delay(&[(0, 0.3), (2, 0.7)])),
    ] {
        let ss = lower_to_state_space(&m).map_err(|e| e.to_string())?;
        let exact = delta_u_autocorr(&ss, &r, 10).map_err(|e| e.to_string())?;
        let y = simulate_dim(&sys, n + burn, 61, 500).unwrap();
        let u = apply_corruption(&m, y.channel(0), 62).unwrap();
        let h = mean_tf(&m).unwrap().impulse_response(200);
        let du: Vec<f64> = (burn..n + burn)
            .map(|t| u[t] - h.iter().enumerate().map(|(k, hk)| hk * y.channel(0)[t - k]).sum::<f64>())
            .collect();
        for (lag, &want) in exact.iter().enumerate() {
            let (est, sd) = autocorr_batches(&du, lag, 100);
            let z = (est - want).abs() / sd;
            worst = worst.max(z);
            if z > 3.0 {
                return Err(format!("{name} lag {lag}: {est:.4} vs {want:.4} ({z:.1} sigma)"));
            }
        }
    }
    let noise = CorruptionModel::MeasurementNoise { variance: 0.7, shaping: None };
    let d = delta_u_autocorr(&lower_to_state_space(&noise).unwrap(), &r, 10).map_err(|e| e.to_string())?;
    if d[0] != 0.7 || d[1..].iter().any(|&v| v != 0.0) {
        return Err(format!("measurement noise gives {d:?}"));
    }
    Ok(format!("lags 0..10 within {worst:.2} sigma; white noise = V delta[k] exactly"))
}

fn c7_exact_support() -> Outcome {
    let t = Instant::now();
    let freqs = grid(64);
    let (mut checked, mut wb_checked) = (0, 0);
    let mut worst_wb: f64 = 0.0;
    for k in 0..200u64 {
        let mut rng = rng_for(2024, k, 0);
        let n = rng.random_range(3..=8);
        let sys = random_dag_system(&mut rng, n, 0.3);
        let z = random_subset(&mut rng, n, 0.3);
        let a = random_assignment(&mut rng, n, &z);
        let (cs, th) = analytic_corruption(&sys, &a, &freqs, AutocorrOptions::default()).map_err(|e| e.to_string())?;
        let (_, g) = exact_support(&cs.uu, 1e-7).map_err(|e| e.to_string())?;
        let pred = predict_spurious(&sys.generative_graph(), &z).map_err(|e| e.to_string())?;
        if !g.is_subgraph_of(&pred.perturbed) {
            return Err(format!("instance {k}: support {:?} exceeds perturbed graph", g.edge_set()));
        }
        checked += 1;
        let zero: Thetas = th.keys().map(|&i| (i, vec![0.0; freqs.len()])).collect();
        let psi0 = corrupted_psd(&analytic_psd(&sys, &freqs).unwrap(), &a, &zero).unwrap().uu;
        // Psi_0 = H Phi H^* is singular when some H vanishes (disinformation)
        if let Ok(w) = woodbury_sequence(&psi0, &z.to_vec(), &th) {
            wb_checked += 1;
            for (x, d) in w.values.iter().zip(&cs.uu.values) {
                let inv = d.clone().try_inverse().unwrap();
                worst_wb = worst_wb.max((x - &inv).iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }
    if worst_wb >= 1e-8 {
        return Err(format!("Woodbury deviation {worst_wb:e}"));
    }
    within(Duration::from_secs(180), t)?;
    Ok(format!(
        "{checked} instances, 0 violations; Woodbury on {wb_checked} invertible-Psi_0 instances, max dev {worst_wb:.1e}; {:.1?}",
        t.elapsed()
    ))
}

fn c8_mrf() -> Outcome {
    let mut rng = rng_for(8, 0, 0);
    for k in 0..200 {
        let n = rng.random_range(2..=10);
        let gm = random_gaussian_model(&mut rng, n, 0.35);
        let z = random_subset(&mut rng, n, 0.3);
        let perts = random_gaussian_perturbations(&mut rng, &z);
        let rep = verify_gaussian(&gm, &perts, 1e-9).map_err(|e| e.to_string())?;
        if !rep.violations.is_empty() {
            return Err(format!("gaussian instance {k}: violations {:?}", rep.violations));
        }
    }
    let (mut agree, mut total) = (0, 0);
    let mut exceptions = Vec::new();
    for k in 0..100 {
        let n = rng.random_range(3..=8);
        let mrf = random_discrete_mrf(&mut rng, n, 0.35);
        let z = random_subset(&mut rng, n, 0.35);
        let perts = random_perturb_factors(&mut rng, &z);
        let rep = verify_pairwise_markov(&mrf, &perts).map_err(|e| e.to_string())?;
        if !rep.violations.is_empty() {
            return Err(format!("discrete instance {k}: dependent non-neighbours {:?}", rep.violations));
        }
        agree += rep.agreements;
        total += rep.pairs.len();
        exceptions.extend(rep.genericity_exceptions.iter().map(|e| (k, *e)));
    }
    for (k, e) in &exceptions {
        println!("  genericity exception: instance {k}, pair {e:?}");
    }
    let rate = agree as f64 / total as f64;
    if rate < 0.95 {
        return Err(format!("discrete agreement {rate:.3}"));
    }
    Ok(format!("gaussian 200/200 clean; discrete agreement {agree}/{total} ({:.1}%)", 100.0 * rate))
}

fn c9_graphs() -> Outcome {
    let fig1 = DirectedGraph::from_arcs(5, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
    if moral_graph(&fig1).edge_set() != &edges(&[(1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (4, 5)]) {
        return Err("moral graph of the diamond".into());
    }
    let star = moral_graph(&DirectedGraph::from_arcs(7, (1..7).map(|k| (0, k))).unwrap());
    if perturbed_graph(&star, &NodeSet::from([1])).unwrap() != star {
        return Err("corrupted leaf changed the star".into());
    }
    if perturbed_graph(&star, &NodeSet::from([0])).unwrap() != UndirectedGraph::complete(7) {
        return Err("corrupted hub is not complete".into());
    }
    let chain = moral_graph(&DirectedGraph::from_arcs(5, (0..4).map(|i| (i, i + 1))).unwrap());
    let base = edges(&[(1, 2), (2, 3), (3, 4), (4, 5)]);
    for (z, extra) in [
        (NodeSet::from([1]), vec![(1, 3)]),
        (NodeSet::from([2]), vec![(2, 4)]),
        (NodeSet::from([1, 2]), vec![(1, 3), (2, 4), (1, 4)]),
    ] {
        let want: BTreeSet<Edge> = base.union(&edges(&extra)).copied().collect();
        if perturbed_graph(&chain, &z).unwrap().edge_set() != &want {
            return Err(format!("chain with Z = {:?}", z.to_vec()));
        }
    }
    let mut rng = rng_for(9, 0, 0);
    for k in 0..1000 {
        let n = rng.random_range(1..=10);
        let mut g = UndirectedGraph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.3) {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        let z = random_subset(&mut rng, n, 0.3);
        let mut zz = z.clone();
        for i in random_subset(&mut rng, n, 0.3).iter() {
            zz.insert(i);
        }
        let (a, b) = (perturbed_graph(&g, &z).unwrap(), perturbed_graph(&g, &zz).unwrap());
        if !g.is_subgraph_of(&a) || !a.is_subgraph_of(&b) {
            return Err(format!("monotonicity fails on draw {k}"));
        }
    }
    Ok("diamond moral graph, star and chain perturbed graphs exact; 1000 monotonicity draws".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 corrupted-leaf star", c1_star_leaf),
        ("2 corrupted-hub star", c2_star_hub),
        ("3 chain with nodes 2,3 corrupted", c3_chain),
        ("4 corrupted spectra vs Welch", c4_corrupted_spectra),
        ("5 packet-drop closed forms", c5_packet_closed_forms),
        ("6 deviation autocorrelations", c6_deviation_autocorr),
        ("7 exact-inverse support property", c7_exact_support),
        ("8 random field suites", c8_mrf),
        ("9 graph theory suite", c9_graphs),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match res {
            Ok(msg) => println!("PASS criterion {name}: {msg} [{:.1?}]", t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg} [{:.1?}]", t.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
