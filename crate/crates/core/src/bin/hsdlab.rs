fn main() {
    std::process::exit(hsdlab::cli::main());
}
