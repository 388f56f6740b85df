//! Colors in SL2(C)* coordinates pushed through a braid by the biquandle,
//! with a numerical Yang-Baxter check.
//!
//! Run with `cargo run --example biquandle`.

use holotor::holonomy::{act_colors_star, biquandle_b, biquandle_residual, defactorize_tuple, random_ext_char};
use holotor::{BraidWord, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let xs: Vec<_> = (0..3).map(|_| random_ext_char(&mut rng)).collect();
    for (j, x) in xs.iter().enumerate() {
        println!("x{}: kappa {:.4}  epsilon {:.4}  phi {:.4}", j + 1, x.chi.kappa, x.chi.epsilon, x.chi.phi);
    }

    let (a4, a3) = biquandle_b(&xs[0].chi, &xs[1].chi)?;
    println!("B(x1, x2) residual of the defining relation: {:.1e}", biquandle_residual(&xs[0].chi, &xs[1].chi, &a4, &a3));

    let lhs = act_colors_star(&BraidWord::new(3, vec![1, 2, 1])?, &xs)?;
    let rhs = act_colors_star(&BraidWord::new(3, vec![2, 1, 2])?, &xs)?;
    let ybe = lhs.iter().zip(&rhs).map(|(a, b)| a.chi.dist(&b.chi)).fold(0.0, f64::max);
    println!("Yang-Baxter: max distance between s1 s2 s1 and s2 s1 s2 colorings {ybe:.1e}");

    // the same tuple as SL2(C) matrices, via the partial products
    let g = defactorize_tuple(&xs.iter().map(|x| x.chi).collect::<Vec<_>>())?;
    println!("traces of the SL2(C) colors: {:?}", g.iter().map(|m| format!("{:.4}", m.trace())).collect::<Vec<_>>());
    Ok(())
}
