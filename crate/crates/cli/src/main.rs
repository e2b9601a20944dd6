fn main() {
    std::process::exit(sitewave_cli::main_with_args(std::env::args_os()));
}
