fn main() {
    std::process::exit(simma::cli::run(std::env::args_os()));
}
