fn main() {
    std::process::exit(microlocal::cli::run(std::env::args_os()));
}
