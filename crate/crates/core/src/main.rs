fn main() {
    std::process::exit(mokit::cli::run_cli(std::env::args()))
}
