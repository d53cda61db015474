fn main() {
    std::process::exit(entropic_lp::cli::run(std::env::args_os()));
}
