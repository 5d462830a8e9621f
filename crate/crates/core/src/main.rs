fn main() {
    std::process::exit(fermi_mf::cli::main_with_args(std::env::args_os()));
}
