fn main() {
    std::process::exit(qcrb::cli::main_with_args(std::env::args_os()));
}
