fn main() {
    std::process::exit(claimsbench::cli::run())
}
