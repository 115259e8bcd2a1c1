fn main() {
    std::process::exit(aurora_campaign::cli::cli_main(std::env::args_os()));
}
