fn main() {
    std::process::exit(maxent::cli::run(std::env::args_os()));
}
