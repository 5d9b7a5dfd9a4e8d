fn main() {
    std::process::exit(fracstefan::cli::run_command(std::env::args_os()));
}
