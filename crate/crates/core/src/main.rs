fn main() -> std::process::ExitCode {
    relaywait::cli::main()
}
