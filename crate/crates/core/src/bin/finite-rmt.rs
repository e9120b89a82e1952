fn main() -> std::process::ExitCode {
    finite_rmt::cli::main()
}
