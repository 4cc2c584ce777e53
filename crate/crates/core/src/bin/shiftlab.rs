fn main() {
    std::process::exit(shiftlab::cli::main_with(std::env::args_os()));
}
