fn main() {
    std::process::exit(semigen_cli::run_from_env());
}
