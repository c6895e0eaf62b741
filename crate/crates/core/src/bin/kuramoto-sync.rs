fn main() {
    std::process::exit(kuramoto_sync::runner::cli::cli_main(std::env::args_os()));
}
