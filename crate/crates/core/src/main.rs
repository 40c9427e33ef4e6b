fn main() {
    std::process::exit(boundary_core::cli::main_with_args(std::env::args_os()));
}
