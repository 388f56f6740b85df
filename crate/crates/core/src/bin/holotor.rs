fn main() {
    std::process::exit(holotor::cli::run());
}
