fn main() -> std::process::ExitCode {
    drumdiff::cli::main()
}
