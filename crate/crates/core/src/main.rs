fn main() {
    std::process::exit(inls_lab::cli::run(std::env::args_os()));
}
