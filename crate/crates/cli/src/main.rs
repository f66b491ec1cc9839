fn main() -> std::process::ExitCode {
    semitoric_cli::main_with(std::env::args_os())
}
