//! Solve a holonomy braiding, its mirror and the doubled braiding, and check
//! the colored braid relation.
//!
//! Run with `cargo run --example braiding`.

use holotor::braiding::{align_phase, doubled_braiding, functor, mirror_braiding, solve_braiding, Functor};
use holotor::holonomy::random_ext_char;
use holotor::{BraidWord, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<_> = (0..3).map(|_| random_ext_char(&mut rng)).collect();

    let c = solve_braiding(&xs[0], &xs[1])?;
    println!("forward braiding: residual {:.1e}, kernel gap {:.1e}", c.residual, c.gap);
    let bar = mirror_braiding(&xs[0], &xs[1])?;
    println!("mirror braiding:  residual {:.1e}, kernel gap {:.1e}", bar.residual, bar.gap);
    let d = doubled_braiding(&xs[0], &xs[1])?;
    println!("doubled braiding: v0 eigenvalue before normalization {:.4}, residual {:.1e}", d.alpha, d.v0_residual);

    let a = BraidWord::new(3, vec![1, 2, 1])?;
    let b = BraidWord::new(3, vec![2, 1, 2])?;
    let (fa, fb) = (functor(Functor::Forward, &a, &xs)?, functor(Functor::Forward, &b, &xs)?);
    let (k, dist) = align_phase(&fa.matrix, &fb.matrix);
    println!("forward functor: s1 s2 s1 = i^{k} s2 s1 s2 up to {dist:.1e}");
    let (ta, tb) = (functor(Functor::Doubled, &a, &xs)?, functor(Functor::Doubled, &b, &xs)?);
    println!("doubled functor: s1 s2 s1 - s2 s1 s2 = {:.1e}", ta.matrix.dist(&tb.matrix));
    Ok(())
}
