fn main() {
    std::process::exit(verity_cli::run(std::env::args_os()));
}
