//! Twisted Burau matrices and Reidemeister torsion of a few colored closures.
//!
//! Run with `cargo run --example torsion`.

use holotor::burau::{burau, det_one_minus, torsion_report, Variant};
use holotor::invariants::diagonal_closure_colors;
use holotor::numerics::{r, Matrix};
use holotor::{BraidWord, Result, SL2Elem};

fn show(m: &Matrix) {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|z| format!("{:>9.4}{:+.4}i", z.re, z.im)).collect();
        println!("    [{}]", row.join("  "));
    }
}

fn main() -> Result<()> {
    // Abelian colors: every strand of a knot carries diag(t, 1/t).
    let trefoil = BraidWord::new(2, vec![1, 1, 1])?;
    let colors = vec![SL2Elem::diag(r(4.0)); 2];
    for variant in [Variant::Boundary, Variant::Reduced] {
        let b = burau(&trefoil, &colors, variant)?;
        println!("trefoil, {variant:?} Burau matrix, det(1 - B) = {:.6}", det_one_minus(&b.matrix)?);
        show(&b.matrix);
    }

    let links = [
        ("unknot", BraidWord::new(1, vec![])?),
        ("Hopf link", BraidWord::new(2, vec![1, 1])?),
        ("trefoil", trefoil),
        ("figure-eight", BraidWord::new(3, vec![1, -2, 1, -2])?),
    ];
    println!();
    for (name, word) in links {
        let comps = holotor::braids::closure_components(&word).len();
        let colors = diagonal_closure_colors(&word, &vec![r(4.0); comps])?;
        let t = torsion_report(&word, &colors, true, 1e-9)?;
        println!(
            "{name:>12}: tau = {:>10.6}  (det(1-B) = {:.4}, det(1-h^-1) = {:.4}, stabilizations {})",
            t.value.re, t.numerator.re, t.denominator.re, t.stabilizations
        );
    }
    Ok(())
}
