fn main() {
    std::process::exit(jointsgl_cli::app::run(std::env::args_os()));
}
