fn main() {
    std::process::exit(qratio::interface::cli::main_exit_code());
}
