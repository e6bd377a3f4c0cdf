fn main() {
    std::process::exit(hardball::cli::main_with_args(std::env::args_os()));
}
