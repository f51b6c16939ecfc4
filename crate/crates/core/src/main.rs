fn main() {
    std::process::exit(gibbs_inverse::cli::main_with_args(std::env::args_os()));
}
