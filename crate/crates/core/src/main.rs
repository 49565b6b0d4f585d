fn main() {
    std::process::exit(latent_forge::runner::cli::run(std::env::args_os()));
}
