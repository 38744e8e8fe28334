fn main() {
    std::process::exit(univ_lab::cli::main_with_args(std::env::args_os()));
}
