use serde::{Deserialize, Serialize};

use super::{MrfError, CI_TOL};
use crate::graphs::{perturbed_graph, Edge, NodeSet, UndirectedGraph};

/// Default cap on the number of joint states enumerated.
pub const DEFAULT_STATE_CAP: u128 = 1 << 20;

/// Nonnegative table over `nodes`, row-major with the first node most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub nodes: Vec<usize>,
    pub table: Vec<f64>,
}

/// Clique-factorized distribution over finite alphabets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMrf {
    cards: Vec<usize>,
    graph: UndirectedGraph,
    factors: Vec<Factor>,
}

impl DiscreteMrf {
    pub fn new(cards: Vec<usize>, graph: UndirectedGraph, factors: Vec<Factor>) -> Result<Self, MrfError> {
        if graph.n() != cards.len() {
            return Err(MrfError::Invalid(format!("{} alphabets for {} nodes", cards.len(), graph.n())));
        }
        if cards.contains(&0) {
            return Err(MrfError::Invalid("alphabet sizes must be positive".into()));
        }
        for f in &factors {
            let mut seen = NodeSet::new();
            for &v in &f.nodes {
                if v >= cards.len() || !seen.insert(v) {
                    return Err(MrfError::Invalid(format!("bad factor scope {:?}", f.nodes)));
                }
            }
            for (a, &i) in f.nodes.iter().enumerate() {
                for &j in &f.nodes[a + 1..] {
                    if !graph.has_edge(i, j) {
                        return Err(MrfError::Invalid(format!("factor scope {:?} is not a clique", f.nodes)));
                    }
                }
            }
            let size: usize = f.nodes.iter().map(|&v| cards[v]).product();
            if f.table.len() != size {
                return Err(MrfError::Invalid(format!("factor {:?} needs {size} entries", f.nodes)));
            }
            if f.table.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(MrfError::Invalid("factor entries must be finite and nonnegative".into()));
            }
        }
        Ok(Self { cards, graph, factors })
    }

    /// Graph taken as the union of the factor scopes.
    pub fn from_factors(cards: Vec<usize>, factors: Vec<Factor>) -> Result<Self, MrfError> {
        let mut g = UndirectedGraph::new(cards.len());
        for f in &factors {
            for (a, &i) in f.nodes.iter().enumerate() {
                for &j in &f.nodes[a + 1..] {
                    if i != j && i < cards.len() && j < cards.len() {
                        g.add_edge(i, j)?;
                    }
                }
            }
        }
        Self::new(cards, g, factors)
    }

    pub fn n(&self) -> usize {
        self.cards.len()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    fn weight(&self, state: &[usize]) -> f64 {
        let mut w = 1.0;
        for f in &self.factors {
            let idx = f.nodes.iter().fold(0, |acc, &v| acc * self.cards[v] + state[v]);
            w *= f.table[idx];
            if w == 0.0 {
                break;
            }
        }
        w
    }
}

/// Kernel `Psi(y_node, u)`, indexed `y * card_u + u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbFactor {
    pub node: usize,
    pub card_u: usize,
    pub table: Vec<f64>,
}

/// Adds one variable per perturbation (`u` of `perts[k]` is node `n + k`)
/// tied to its source by a pairwise factor.
pub fn join_with_perturbations(mrf: &DiscreteMrf, perts: &[PerturbFactor]) -> Result<DiscreteMrf, MrfError> {
    let n = mrf.n();
    let mut cards = mrf.cards.clone();
    let mut g = UndirectedGraph::new(n + perts.len());
    for (i, j) in mrf.graph.edges() {
        g.add_edge(i, j)?;
    }
    let mut factors = mrf.factors.clone();
    let mut z = NodeSet::new();
    for (k, p) in perts.iter().enumerate() {
        if p.node >= n || !z.insert(p.node) {
            return Err(MrfError::Invalid(format!("bad or repeated perturbed node {}", p.node)));
        }
        if p.card_u == 0 || p.table.len() != mrf.cards[p.node] * p.card_u {
            return Err(MrfError::Invalid(format!("perturbation table for node {} has the wrong size", p.node)));
        }
        cards.push(p.card_u);
        g.add_edge(p.node, n + k)?;
        factors.push(Factor { nodes: vec![p.node, n + k], table: p.table.clone() });
    }
    DiscreteMrf::new(cards, g, factors)
}

/// Normalized table over `vars`, row-major with the first variable most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbTable {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
}

impl ProbTable {
    pub fn index(&self, assignment: &[usize]) -> usize {
        assignment.iter().zip(&self.cards).fold(0, |acc, (&x, &c)| acc * c + x)
    }

    pub fn get(&self, assignment: &[usize]) -> f64 {
        self.probs[self.index(assignment)]
    }

    fn position(&self, var: usize) -> Result<usize, MrfError> {
        self.vars
            .iter()
            .position(|&v| v == var)
            .ok_or_else(|| MrfError::Invalid(format!("variable {var} not in table")))
    }
}

/// Exact marginal over `keep` (ascending) by summing every joint state.
pub fn brute_marginal(mrf: &DiscreteMrf, keep: &NodeSet, cap: u128) -> Result<ProbTable, MrfError> {
    keep.check_range(mrf.n())?;
    let states = mrf.cards.iter().map(|&c| c as u128).product::<u128>();
    if states > cap {
        return Err(MrfError::CapExceeded { states, cap });
    }
    let vars = keep.to_vec();
    let cards: Vec<usize> = vars.iter().map(|&v| mrf.cards[v]).collect();
    let mut probs = vec![0.0; cards.iter().product()];
    let mut state = vec![0usize; mrf.n()];
    loop {
        let w = mrf.weight(&state);
        if w != 0.0 {
            let idx = vars.iter().fold(0, |acc, &v| acc * mrf.cards[v] + state[v]);
            probs[idx] += w;
        }
        // odometer, last variable fastest
        let mut k = mrf.n();
        loop {
            if k == 0 {
                let total: f64 = probs.iter().sum();
                if !(total > 0.0) {
                    return Err(MrfError::ZeroMass);
                }
                probs.iter_mut().for_each(|p| *p /= total);
                return Ok(ProbTable { vars, cards, probs });
            }
            k -= 1;
            state[k] += 1;
            if state[k] < mrf.cards[k] {
                break;
            }
            state[k] = 0;
        }
    }
}

/// Largest `|P(x_i, x_j | rest) - P(x_i | rest) P(x_j | rest)|` over all cells,
/// conditioning on every other variable of the table.
pub fn ci_gap(table: &ProbTable, i: usize, j: usize) -> Result<f64, MrfError> {
    let (pi, pj) = (table.position(i)?, table.position(j)?);
    if pi == pj {
        return Err(MrfError::Invalid("need two distinct variables".into()));
    }
    let rest: Vec<usize> = (0..table.vars.len()).filter(|&k| k != pi && k != pj).collect();
    let (ci, cj) = (table.cards[pi], table.cards[pj]);
    let n_rest: usize = rest.iter().map(|&k| table.cards[k]).product();
    let mut full = vec![0usize; table.vars.len()];
    let mut r = vec![0usize; rest.len()];
    let mut gap: f64 = 0.0;
    for _ in 0..n_rest {
        for (a, &k) in rest.iter().enumerate() {
            full[k] = r[a];
        }
        let mut joint = vec![0.0; ci * cj];
        for x in 0..ci {
            for y in 0..cj {
                full[pi] = x;
                full[pj] = y;
                joint[x * cj + y] = table.get(&full);
            }
        }
        let mass: f64 = joint.iter().sum();
        if !(mass > 0.0) {
            return Err(MrfError::ZeroConditioning(r.clone()));
        }
        for x in 0..ci {
            let px: f64 = (0..cj).map(|y| joint[x * cj + y]).sum::<f64>() / mass;
            for y in 0..cj {
                let py: f64 = (0..ci).map(|x2| joint[x2 * cj + y]).sum::<f64>() / mass;
                gap = gap.max((joint[x * cj + y] / mass - px * py).abs());
            }
        }
        for a in (0..rest.len()).rev() {
            r[a] += 1;
            if r[a] < table.cards[rest[a]] {
                break;
            }
            r[a] = 0;
        }
    }
    Ok(gap)
}

/// Whether variables `i` and `j` are independent given the rest of the table.
pub fn conditional_independence(table: &ProbTable, i: usize, j: usize) -> Result<bool, MrfError> {
    Ok(ci_gap(table, i, j)? < CI_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub pair: Edge,
    pub adjacent: bool,
    pub dependent: bool,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub z: NodeSet,
    pub graph: UndirectedGraph,
    pub perturbed: UndirectedGraph,
    pub pairs: Vec<PairVerdict>,
    pub agreements: usize,
    /// Dependent pairs that are not perturbed-graph neighbours.
    pub violations: Vec<Edge>,
    /// Perturbed-graph neighbours that happen to be conditionally independent.
    pub genericity_exceptions: Vec<Edge>,
}

impl MarkovReport {
    pub fn agreement_rate(&self) -> f64 {
        if self.pairs.is_empty() {
            1.0
        } else {
            self.agreements as f64 / self.pairs.len() as f64
        }
    }
}

/// Pairwise conditional independence among the measured variables (`u_i`
/// for perturbed nodes, `y_i` otherwise) against adjacency in the perturbed
/// graph.
pub fn verify_pairwise_markov(mrf: &DiscreteMrf, perts: &[PerturbFactor]) -> Result<MarkovReport, MrfError> {
    let n = mrf.n();
    let joint = join_with_perturbations(mrf, perts)?;
    let z: NodeSet = perts.iter().map(|p| p.node).collect();
    let mut var = (0..n).collect::<Vec<_>>();
    for (k, p) in perts.iter().enumerate() {
        var[p.node] = n + k;
    }
    let table = brute_marginal(&joint, &var.iter().copied().collect(), DEFAULT_STATE_CAP)?;
    let perturbed = perturbed_graph(&mrf.graph, &z)?;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let gap = ci_gap(&table, var[i], var[j])?;
            pairs.push(PairVerdict { pair: (i, j), adjacent: perturbed.has_edge(i, j), dependent: gap >= CI_TOL, gap });
        }
    }
    let agreements = pairs.iter().filter(|p| p.adjacent == p.dependent).count();
    let violations = pairs.iter().filter(|p| p.dependent && !p.adjacent).map(|p| p.pair).collect();
    let genericity_exceptions = pairs.iter().filter(|p| !p.dependent && p.adjacent).map(|p| p.pair).collect();
    Ok(MarkovReport {
        z,
        graph: mrf.graph.clone(),
        perturbed,
        pairs,
        agreements,
        violations,
        genericity_exceptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ising(j: f64) -> Vec<f64> {
        vec![j.exp(), (-j).exp(), (-j).exp(), j.exp()]
    }

    fn chain(n: usize) -> DiscreteMrf {
        let f = (0..n - 1).map(|i| Factor { nodes: vec![i, i + 1], table: ising(0.3 + 0.1 * i as f64) }).collect();
        DiscreteMrf::from_factors(vec![2; n], f).unwrap()
    }

    fn noisy_copy(node: usize) -> PerturbFactor {
        PerturbFactor { node, card_u: 2, table: vec![0.8, 0.2, 0.3, 0.7] }
    }

    #[test]
    fn uniform_bits() {
        let m = DiscreteMrf::from_factors(vec![2; 3], vec![]).unwrap();
        let t = brute_marginal(&m, &NodeSet::from([0, 2]), DEFAULT_STATE_CAP).unwrap();
        assert!(t.probs.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!(conditional_independence(&t, 0, 2).unwrap());
    }

    #[test]
    fn chain_endpoints_match_transfer_matrix() {
        let m = chain(3);
        let t = brute_marginal(&m, &NodeSet::from([0, 2]), DEFAULT_STATE_CAP).unwrap();
        let a = nalgebra::Matrix2::from_row_slice(&ising(0.3));
        let b = nalgebra::Matrix2::from_row_slice(&ising(0.4));
        let tm = a * b;
        let z = tm.sum();
        for x in 0..2 {
            for y in 0..2 {
                assert!((t.get(&[x, y]) - tm[(x, y)] / z).abs() < 1e-15);
            }
        }
        assert!(!conditional_independence(&t, 0, 2).unwrap());
        let all = brute_marginal(&m, &(0..3).collect(), DEFAULT_STATE_CAP).unwrap();
        assert!((all.probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(conditional_independence(&all, 0, 2).unwrap());
    }

    #[test]
    fn product_distribution_is_independent() {
        let f = (0..3).map(|i| Factor { nodes: vec![i], table: vec![1.0, 1.0 + i as f64] }).collect();
        let m = DiscreteMrf::from_factors(vec![2; 3], f).unwrap();
        let t = brute_marginal(&m, &(0..3).collect(), DEFAULT_STATE_CAP).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(conditional_independence(&t, i, j).unwrap());
        }
    }

    #[test]
    fn join_adds_one_factor_and_marginalizes_back() {
        let m = chain(3);
        let j = join_with_perturbations(&m, &[noisy_copy(1)]).unwrap();
        assert_eq!(j.n(), 4);
        assert_eq!(j.factors().len(), m.factors().len() + 1);
        assert!(j.graph().has_edge(1, 3));
        // rows of the kernel sum to one, so summing out u leaves P(Y)
        let back = brute_marginal(&j, &(0..3).collect(), DEFAULT_STATE_CAP).unwrap();
        let orig = brute_marginal(&m, &(0..3).collect(), DEFAULT_STATE_CAP).unwrap();
        for (a, b) in back.probs.iter().zip(&orig.probs) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(join_with_perturbations(&m, &[]).unwrap(), m);
        let bad = PerturbFactor { node: 1, card_u: 3, table: vec![1.0; 4] };
        assert!(join_with_perturbations(&m, &[bad]).is_err());
    }

    #[test]
    fn pairwise_markov_examples() {
        let r = verify_pairwise_markov(&chain(4), &[]).unwrap();
        assert_eq!(r.agreements, r.pairs.len());
        let r = verify_pairwise_markov(&chain(4), &[noisy_copy(1)]).unwrap();
        assert!(r.violations.is_empty() && r.genericity_exceptions.is_empty());
        let dep: Vec<Edge> = r.pairs.iter().filter(|p| p.dependent).map(|p| p.pair).collect();
        assert_eq!(dep, vec![(0, 1), (0, 2), (1, 2), (2, 3)]);

        let f = (1..5).map(|k| Factor { nodes: vec![0, k], table: ising(0.5) }).collect();
        let star = DiscreteMrf::from_factors(vec![2; 5], f).unwrap();
        let r = verify_pairwise_markov(&star, &[noisy_copy(0)]).unwrap();
        assert!(r.pairs.iter().all(|p| p.dependent));
    }

    #[test]
    fn validation_and_caps() {
        let g = UndirectedGraph::new(3);
        let f = Factor { nodes: vec![0, 1], table: vec![1.0; 4] };
        assert!(DiscreteMrf::new(vec![2; 3], g, vec![f]).is_err());
        let neg = Factor { nodes: vec![0], table: vec![1.0, -1.0] };
        assert!(DiscreteMrf::from_factors(vec![2; 3], vec![neg]).is_err());
        let big = DiscreteMrf::from_factors(vec![2; 21], vec![]).unwrap();
        assert!(matches!(
            brute_marginal(&big, &NodeSet::from([0]), DEFAULT_STATE_CAP),
            Err(MrfError::CapExceeded { .. })
        ));
        let zero = Factor { nodes: vec![0], table: vec![0.0, 0.0] };
        let m = DiscreteMrf::from_factors(vec![2; 2], vec![zero]).unwrap();
        assert!(matches!(brute_marginal(&m, &NodeSet::from([0]), DEFAULT_STATE_CAP), Err(MrfError::ZeroMass)));
    }

    #[test]
    fn zero_conditioning_cell_is_reported() {
        let f = Factor { nodes: vec![2], table: vec![1.0, 0.0] };
        let m = DiscreteMrf::from_factors(vec![2; 3], vec![f]).unwrap();
        let t = brute_marginal(&m, &(0..3).collect(), DEFAULT_STATE_CAP).unwrap();
        assert!(matches!(conditional_independence(&t, 0, 1), Err(MrfError::ZeroConditioning(_))));
    }
}
