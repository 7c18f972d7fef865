fn main() {
    // LAPACK backend: the system OpenBLAS (which bundles LAPACK).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
