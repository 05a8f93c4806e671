use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let bindings = match cbindgen::generate_with_config(&dir, config) {
        Ok(b) => b,
        Err(e) => {
            // keep the last good header rather than failing the build on a parse hiccup
            println!("cargo:warning=header not regenerated: {e}");
            return;
        }
    };
    bindings.write_to_file(dir.join("include").join("bsymp.h"));
}
