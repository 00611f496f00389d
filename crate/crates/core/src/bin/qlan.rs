fn main() -> std::process::ExitCode {
    qlan::cli::main_with_args(std::env::args_os())
}
