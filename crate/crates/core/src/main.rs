fn main() {
    std::process::exit(mmslab::cli::run(std::env::args_os()));
}
