fn main() {
    std::process::exit(bss_core::cli::run(std::env::args_os()));
}
