fn main() {
    std::process::exit(artrecon_cli::main_with(std::env::args_os()));
}
