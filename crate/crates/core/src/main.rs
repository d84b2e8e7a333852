fn main() {
    std::process::exit(tubewave::cli::run_cli());
}
