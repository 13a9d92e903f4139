fn main() {
    std::process::exit(pv_cli::run(std::env::args_os()));
}
