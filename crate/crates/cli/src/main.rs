fn main() {
    std::process::exit(bjac_cli::run_from(std::env::args_os()));
}
