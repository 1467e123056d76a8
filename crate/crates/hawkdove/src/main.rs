fn main() {
    std::process::exit(hawkdove::cli::main_with(std::env::args_os()));
}
