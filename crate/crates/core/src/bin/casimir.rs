fn main() {
    std::process::exit(casimir_roughness::cli::run(std::env::args_os()));
}
