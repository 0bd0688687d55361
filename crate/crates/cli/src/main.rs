fn main() {
    std::process::exit(smutf_cli::run(std::env::args_os()));
}
