//! Regenerates `data/catalog32.txt`: one representative of every
//! isomorphism class of 32-run regular designs with 6 to 12 factors.
//!
//! ```text
//! cargo run --release --example catalog_gen > crates/core/data/catalog32.txt
//! ```

use condma::catalog::isomorphism_classes;

fn main() {
    println!("# 32-run regular designs, one per isomorphism class, 6 <= n <= 12");
    println!("runs: 32");
    for (n, classes) in isomorphism_classes(5, 12) {
        println!("# n = {n}: {} classes", classes.len());
        for cols in classes {
            let cells: Vec<String> = cols.iter().map(u32::to_string).collect();
            println!("{n}: {}", cells.join(" "));
        }
    }
}
