fn main() {
    eprintln!("not yet wired");
}
