fn main() {
    std::process::exit(fiberphase::cli_io::main_with_args(std::env::args_os()));
}
