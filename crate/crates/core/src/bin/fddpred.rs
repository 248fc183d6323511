fn main() {
    std::process::exit(fddpred::cli::main_with_args(std::env::args_os()));
}
