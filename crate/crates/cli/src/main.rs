fn main() {
    std::process::exit(pathadv_cli::run_cli(std::env::args_os()));
}
