fn main() {
    std::process::exit(shuffle_accountant::cli::main());
}
