fn main() {
    std::process::exit(entropy_grid::cli::main_with_args(std::env::args_os()));
}
