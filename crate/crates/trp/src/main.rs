fn main() {
    std::process::exit(trp::cli::run());
}
