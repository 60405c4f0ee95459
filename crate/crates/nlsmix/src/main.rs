fn main() {
    std::process::exit(nlsmix::run(std::env::args_os().collect()));
}
