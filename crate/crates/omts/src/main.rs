fn main() {
    let (code, out) = omts::cli::run(std::env::args());
    print!("{out}");
    std::process::exit(code);
}
