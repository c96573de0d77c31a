fn main() {
    std::process::exit(mechpattern_cli::main_with_args(std::env::args_os()));
}
