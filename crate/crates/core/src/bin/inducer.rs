fn main() {
    std::process::exit(inducer::cli::run(std::env::args_os()));
}
