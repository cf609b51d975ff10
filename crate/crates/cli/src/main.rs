fn main() {
    std::process::exit(mapflux_cli::run(std::env::args_os()));
}
