fn main() -> std::process::ExitCode {
    forestqb::cli::main()
}
