fn main() -> std::process::ExitCode {
    primdisc::cli::main()
}
