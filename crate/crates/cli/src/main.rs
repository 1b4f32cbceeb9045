fn main() {
    std::process::exit(ecp_cli::main_with_stdio());
}
