fn main() {
    std::process::exit(honu_cli::run());
}
