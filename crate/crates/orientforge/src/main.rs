fn main() {
    std::process::exit(orientforge::cli::run(std::env::args_os()));
}
