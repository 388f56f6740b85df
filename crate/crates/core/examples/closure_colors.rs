//! Find an irreducible SL2(C) coloring of the figure-eight closure and check
//! that its torsion does not depend on the gauge.
//!
//! Run with `cargo run --example closure_colors`.

use holotor::braids::{act_colors_sl2, total_holonomy};
use holotor::burau::torsion;
use holotor::holonomy::{gauge_transform, random_sl2};
use holotor::invariants::solve_closure_colors;
use holotor::numerics::c;
use holotor::{BraidWord, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let word = BraidWord::new(3, vec![1, -2, 1, -2])?;
    // meridian eigenvalue m, so each strand has trace m + 1/m
    let m = c(1.6, 0.4);
    let colors = solve_closure_colors(&word, &[m], true, 11)?;
    let image = act_colors_sl2(&word, &colors)?;
    let residual = colors.iter().zip(&image).map(|(a, b)| a.dist(b)).fold(0.0, f64::max);
    println!("figure-eight colors (closure residual {residual:.1e}):");
    for (j, g) in colors.iter().enumerate() {
        println!("  g{} = [[{:.4}, {:.4}], [{:.4}, {:.4}]]", j + 1, g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1));
    }
    println!("trace of total holonomy: {:.6}", total_holonomy(&colors).trace());

    let tau = torsion(&word, &colors, true)?;
    println!("torsion: {tau:.8}");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..3 {
        let conj = gauge_transform(&colors, &random_sl2(&mut rng));
        println!("  gauge {k}: {:.8}", torsion(&word, &conj, true)?);
    }
    Ok(())
}
