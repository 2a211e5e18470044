fn main() {
    std::process::exit(extravagance::cli::run(std::env::args_os()));
}
