fn main() {
    std::process::exit(stratagem::cli::run(std::env::args_os()));
}
