use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let cfg = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    match cbindgen::Builder::new().with_crate(&dir).with_config(cfg).generate() {
        Ok(b) => {
            b.write_to_file(dir.join("include/netcorrupt.h"));
        }
        // keep building when the header can't be regenerated (e.g. a parse error mid-edit)
        Err(e) => println!("cargo:warning=cbindgen: {e}"),
    }
}
