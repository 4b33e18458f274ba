fn main() {
    std::process::exit(reflecto::cli::main_entry());
}
