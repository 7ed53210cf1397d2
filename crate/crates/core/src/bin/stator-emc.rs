fn main() {
    std::process::exit(stator_emc::cli::main_with_args(std::env::args_os()));
}
