fn main() {
    println!("paperlab");
}
