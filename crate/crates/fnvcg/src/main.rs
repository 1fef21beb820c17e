fn main() {
    std::process::exit(fnvcg::cli::run(std::env::args_os()));
}
