fn main() {
    std::process::exit(devroye_lab::cli::run(std::env::args_os()));
}
