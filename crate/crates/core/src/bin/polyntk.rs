fn main() {
    std::process::exit(polyntk::cli::cli_main(std::env::args_os()));
}
