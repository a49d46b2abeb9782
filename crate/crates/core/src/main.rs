fn main() -> std::process::ExitCode {
    tooltamp::cli::main()
}
