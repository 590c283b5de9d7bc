fn main() {
    std::process::exit(coexist::cli::run(std::env::args_os()));
}
