fn main() {
    std::process::exit(uinfer::cli::run(std::env::args_os()));
}
