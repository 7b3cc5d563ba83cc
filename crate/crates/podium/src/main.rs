fn main() -> std::process::ExitCode {
    podium::cli::main_with(std::env::args_os())
}
