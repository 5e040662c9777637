fn main() {
    std::process::exit(cantolex::cli::run(std::env::args_os()));
}
