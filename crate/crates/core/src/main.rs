fn main() {
    std::process::exit(ela_fingerprints::cli::run());
}
