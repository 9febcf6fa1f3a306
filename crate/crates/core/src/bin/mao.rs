fn main() {
    std::process::exit(mao::cli::run(std::env::args_os()));
}
