fn main() {
    env_logger::init();
    std::process::exit(horolab::cli::run(std::env::args_os()));
}
