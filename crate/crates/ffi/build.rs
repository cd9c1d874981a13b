use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();

    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("JOBCAST_H".to_string());
    config.cpp_compat = true;
    config.documentation = true;

    let header: PathBuf = [crate_dir.as_str(), "include", "jobcast.h"].iter().collect();
    cbindgen::Builder::new()
        .with_config(config)
        .with_crate(&crate_dir)
        .with_header("/* C API for the jobcast toolkit. */")
        .generate()
        .expect("unable to generate bindings")
        .write_to_file(header);

    println!("cargo:rerun-if-changed=src/lib.rs");
}
