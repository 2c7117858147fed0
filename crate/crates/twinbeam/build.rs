fn main() {
    // System OpenBLAS provides both CBLAS and LAPACK symbols.
    println!("cargo:rustc-link-lib=openblas");
}
