fn main() {
    std::process::exit(qslice_cli::run(std::env::args_os()));
}
