//! Mean PSNR per corruption kind and severity over synthetic images.
//! Usage: `cargo run --release --example severity_sweep -- [n] [side]`.

#[path = "../tests/common/mod.rs"]
mod common;

use dvd_core::degradations::{corrupt, CorruptionKind, CorruptionSpec};
use dvd_core::image::psnr;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let side: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(64);
    let imgs: Vec<_> = (0..n).map(|i| common::synthetic_image(1000 + i as u64, side, side)).collect();
    for kind in CorruptionKind::ALL {
        let mut row = Vec::new();
        for s in 1..=5u8 {
            let spec = CorruptionSpec::new(kind, s).unwrap();
            let mean: f64 = imgs
                .iter()
                .enumerate()
                .map(|(i, img)| psnr(img, &corrupt(img, &spec, 7, &format!("c/{i}")).unwrap()))
                .sum::<f64>()
                / n as f64;
            row.push(mean);
        }
        let mono = row.windows(2).all(|w| w[1] <= w[0]);
        println!("{:18} {} {}", kind.name(), row.iter().map(|v| format!("{v:7.2}")).collect::<Vec<_>>().join(" "), if mono { "ok" } else { "NONMONO" });
    }
}
