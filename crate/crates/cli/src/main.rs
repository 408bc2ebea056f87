fn main() {
    std::process::exit(polydisc_cli::main_with_args(std::env::args_os()));
}
