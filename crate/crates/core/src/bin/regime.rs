fn main() {
    std::process::exit(regime_switch::cli::run(std::env::args_os()));
}
