fn main() -> std::process::ExitCode {
    btree_histories::cli::main()
}
