fn main() {
    std::process::exit(xychain::cli::main_with_args(std::env::args_os()));
}
