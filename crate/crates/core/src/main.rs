fn main() {
    std::process::exit(shockspec::cli::run(std::env::args_os()));
}
