fn main() {
    std::process::exit(ccpart::cli::main_entry());
}
