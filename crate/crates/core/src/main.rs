fn main() {
    std::process::exit(impulse_moments::cli::run(std::env::args_os()));
}
