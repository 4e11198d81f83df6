fn main() {
    std::process::exit(dcbp::cli::run());
}
