fn main() {
    std::process::exit(cone_mcf_cli::main_with(std::env::args_os()));
}
