fn main() {
    // failures are reported as one tagged line by the driver
    std::panic::set_hook(Box::new(|_| {}));
    std::process::exit(exdev_cli::main_with_args(std::env::args_os()));
}
