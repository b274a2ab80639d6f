fn main() {
    std::process::exit(kacstroock::cli::run(std::env::args_os()));
}
