fn main() {
    std::process::exit(pspin::cli::main_with_args(std::env::args_os()));
}
