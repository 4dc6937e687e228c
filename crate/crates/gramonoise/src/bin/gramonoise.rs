fn main() {
    std::process::exit(gramonoise::cli::run(std::env::args()));
}
