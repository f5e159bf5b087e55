fn main() -> std::process::ExitCode {
    compopt::cli::main()
}
