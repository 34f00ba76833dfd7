fn main() {
    std::process::exit(iabandit::cli::run(std::env::args_os()));
}
