fn main() {
    // CLI wiring lands with the dispatch driver.
    eprintln!("chpd: no subcommands implemented yet");
    std::process::exit(2);
}
