fn main() {
    std::process::exit(dmkp_core::cli::run(std::env::args_os()));
}
