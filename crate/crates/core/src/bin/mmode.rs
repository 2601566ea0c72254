fn main() {
    std::process::exit(mmode::cli::run(std::env::args_os()));
}
