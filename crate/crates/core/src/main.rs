fn main() {
    std::process::exit(sle_kappa::cli::run(std::env::args_os()));
}
