fn main() {
    std::process::exit(mfe_core::cli::main_with_args(std::env::args_os()));
}
