fn main() {
    let dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    println!("cargo:rerun-if-changed=src/lib.rs");
    let cfg = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("FRACSPEC_H".into()),
        cpp_compat: true,
        ..Default::default()
    };
    match cbindgen::Builder::new().with_crate(&dir).with_config(cfg).generate() {
        Ok(b) => {
            b.write_to_file(format!("{dir}/include/fracspec.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
