fn main() -> std::process::ExitCode {
    levyfd::harness::cli::main()
}
