fn main() {
    std::process::exit(balmat::cli::main_with_args(std::env::args_os()));
}
