fn main() {
    std::process::exit(censored_bell::cli::main());
}
