fn main() {
    std::process::exit(shearwave::cli::main_with_args(std::env::args_os()));
}
