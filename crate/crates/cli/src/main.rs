fn main() {
    std::process::exit(thermoform_cli::main_with_args(std::env::args_os()));
}
