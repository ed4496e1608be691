fn main() {
    std::process::exit(levy_action::cli::run(std::env::args_os()));
}
