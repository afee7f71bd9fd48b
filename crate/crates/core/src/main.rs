fn main() {
    std::process::exit(rankplan::cli::run_from(std::env::args_os()));
}
