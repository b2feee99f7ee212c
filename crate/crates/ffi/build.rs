//! Regenerates `include/qzt.h` from the crate's public C surface. The
//! header is committed; the build only rewrites it when the surface
//! changed, so clean checkouts build without touching the tree.

use std::env;
use std::fs;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("cargo sets manifest dir"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    let mut generated = Vec::new();
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation succeeds")
        .write(&mut generated);

    let header = crate_dir.join("include").join("qzt.h");
    let current = fs::read(&header).unwrap_or_default();
    if current != generated {
        fs::create_dir_all(header.parent().expect("header has a parent"))
            .expect("include directory is writable");
        fs::write(&header, generated).expect("header is writable");
    }
}
