fn main() {
    std::process::exit(taxolink::cli::main_with_args(std::env::args_os()));
}
