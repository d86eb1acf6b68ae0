//! Writes the stand-in X6CrMoS17 data files: a major-loop traversal and an
//! initial magnetization curve sampled from the analytic permeability.
//!
//!     cargo run --example synthetic_data -- crates/core/data

use std::path::PathBuf;

use switchmag::material::synthetic::SyntheticLoop;
use switchmag::material::{synthesize_initial_curve, PermeabilityFit};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;

    let l = SyntheticLoop::default();
    let hs = SyntheticLoop::field_samples(59_500.0, 400);
    let mut text = String::from("# synthetic major loop, falling from +H then rising\n# H[A/m] J[T]\n");
    for &h in hs.iter().rev() {
        text.push_str(&format!("{h:.6e} {:.9e}\n", l.falling(h)));
    }
    for &h in hs.iter().skip(1) {
        text.push_str(&format!("{h:.6e} {:.9e}\n", l.rising(h)));
    }
    std::fs::write(dir.join("x6crmos17_loop.txt"), text)?;

    let fit = PermeabilityFit::<f64>::x6crmos17();
    let bs: Vec<f64> = (1..=80).map(|k| 0.02 * k as f64).collect();
    let curve = synthesize_initial_curve(&fit, &bs).expect("valid curve");
    let mut text = String::from("# initial magnetization curve from the analytic permeability\n# H[A/m] J[T]\n");
    for (h, j) in curve.samples() {
        text.push_str(&format!("{h:.9e} {j:.9e}\n"));
    }
    std::fs::write(dir.join("x6crmos17_initial.txt"), text)?;
    Ok(())
}
