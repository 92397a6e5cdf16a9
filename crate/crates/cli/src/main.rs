fn main() {
    std::process::exit(qwm_cli::run(std::env::args_os()));
}
