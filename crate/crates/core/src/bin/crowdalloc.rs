fn main() {
    std::process::exit(crowdalloc::cli::main());
}
