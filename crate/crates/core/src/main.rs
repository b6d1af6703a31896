fn main() {
    std::process::exit(transid::cli::run(std::env::args_os()));
}
