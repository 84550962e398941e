fn main() {
    std::process::exit(permutons::cli::run(std::env::args_os()));
}
