fn main() {
    // CLI wiring lands with the io module.
    eprintln!("wallstress CLI: not yet wired");
    std::process::exit(2);
}
