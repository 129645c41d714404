fn main() {
    std::process::exit(tangent_core::cli::main_with_args(std::env::args_os()));
}
