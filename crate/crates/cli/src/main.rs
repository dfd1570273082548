fn main() {
    std::process::exit(hsreg_cli::run(std::env::args_os()));
}
