fn main() {
    std::process::exit(driven_dicke::cli::main_with(std::env::args_os()));
}
