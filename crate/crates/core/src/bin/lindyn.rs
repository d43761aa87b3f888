fn main() {
    std::process::exit(lindyn::cli::run(std::env::args_os()));
}
