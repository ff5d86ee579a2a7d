fn main() {
    std::process::exit(polydisk_cli::dispatch(std::env::args_os()));
}
