fn main() {
    std::process::exit(fuzzyspec::cli::main());
}
