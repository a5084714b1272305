fn main() {
    std::process::exit(lareval_cli::run(std::env::args_os()));
}
