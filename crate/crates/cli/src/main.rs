fn main() {
    std::process::exit(ferrosim_cli::run(std::env::args_os()));
}
