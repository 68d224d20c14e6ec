fn main() {
    std::process::exit(pomg_cli::run(std::env::args_os()));
}
