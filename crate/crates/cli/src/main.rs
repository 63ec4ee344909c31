fn main() {
    std::process::exit(expose_cli::main_with(std::env::args_os()));
}
