fn main() {
    std::process::exit(renyi_clt_cli::main_with(std::env::args_os()));
}
