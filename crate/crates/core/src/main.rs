fn main() {
    std::process::exit(fairalloc::harness::cli::cli_main(std::env::args_os()));
}
