fn main() {
    std::process::exit(csgs::io::cli::run_cli(std::env::args_os()));
}
