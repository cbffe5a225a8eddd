fn main() {
    std::process::exit(isvb::cli::main_with_args(std::env::args_os()));
}
