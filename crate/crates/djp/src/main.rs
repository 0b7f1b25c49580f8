fn main() {
    println!("djp cli placeholder");
}
