fn main() {
    std::process::exit(ellis_cli::cli::main());
}
