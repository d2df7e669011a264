fn main() -> std::process::ExitCode {
    phsolve::cli::main()
}
