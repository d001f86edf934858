//! Wall-clock timings for a few eight-vertex forests.
//!
//! Run with `cargo run --release -p branched-renorm --example timing`.

use std::time::Instant;

use branched_renorm::forest::{parse_forest, ParseMode};
use branched_renorm::renorm::renormalize;

const FORESTS: &[&str] = &[
    "(1 (2 (3 (4 (5 (6 (7 (8))))))))",
    "(1 (1) (1) (1) (1) (1) (1) (1))",
    "(1 (2) (3 (1))) (2 (1 (3)) (2))",
    "(1 (2 (3)) (4)) (5 (6 (7) (8)))",
    "(1 (2 (3 (4 (5 (6))))))",
    "(1) (2) (3) (4) (5) (6) (7) (8)",
];

fn main() {
    for text in FORESTS {
        let (f, q) = parse_forest(text, ParseMode::Auto).expect("example forests parse");
        let start = Instant::now();
        let value = renormalize(&f, &q).expect("example forests renormalize");
        println!("{text}: {} in {:.3?}", value.exact, start.elapsed());
    }
}
