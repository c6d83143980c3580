fn main() {
    std::process::exit(radiogram_cli::run(std::env::args_os()));
}
