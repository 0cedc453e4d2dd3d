fn main() {
    std::process::exit(hpf::cli::run(std::env::args_os()));
}
