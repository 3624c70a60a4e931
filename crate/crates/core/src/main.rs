fn main() {
    std::process::exit(cmphase::cli::main_with_args(std::env::args_os()));
}
