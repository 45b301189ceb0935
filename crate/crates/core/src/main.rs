fn main() {
    std::process::exit(brep2shape::cli::run(std::env::args_os()));
}
