fn main() {
    std::process::exit(pairedmc::cli::main());
}
