fn main() {
    std::process::exit(stabset::cli::run());
}
