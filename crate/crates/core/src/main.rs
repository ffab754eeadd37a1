fn main() {
    std::process::exit(hjhomog::cli::run(std::env::args_os()));
}
