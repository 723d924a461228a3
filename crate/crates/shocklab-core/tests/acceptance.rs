//! End-to-end acceptance runs; prints one line per criterion.

fn main() {
    println!("acceptance: placeholder (criteria not wired up yet)");
}
