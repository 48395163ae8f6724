fn main() {
    std::process::exit(cgdiqa::cli::run());
}
