use std::env;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR not set");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        pragma_once: true,
        include_version: true,
        header: Some(
            "/* C interface to the fastckpt checkpoint persistence engine. */".to_string(),
        ),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        ..Default::default()
    };

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("cbindgen failed to generate fastckpt.h")
        .write_to_file(format!("{crate_dir}/include/fastckpt.h"));

    println!("cargo:rerun-if-changed=src/lib.rs");
}
