fn main() {
    std::process::exit(modcomm_cli::main_with(std::env::args_os()));
}
