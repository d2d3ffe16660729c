fn main() {
    std::process::exit(colorhom::cli::cli_main(std::env::args()));
}
