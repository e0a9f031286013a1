fn main() {
    std::process::exit(cwb_cli::run(std::env::args_os()));
}
