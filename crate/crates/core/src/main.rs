fn main() {
    std::process::exit(cesm::cli::main());
}
