fn main() {
    std::process::exit(fftu::cli::main(std::env::args_os()));
}
