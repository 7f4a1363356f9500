fn main() {
    std::process::exit(damt::run(std::env::args_os()));
}
