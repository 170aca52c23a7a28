fn main() {
    std::process::exit(lieboltz::cli::main_entry());
}
