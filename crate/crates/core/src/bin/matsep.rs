fn main() {
    std::process::exit(matsep::cli::run(std::env::args_os()));
}
