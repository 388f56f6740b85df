//! Full invariant reports (torsion, T, F, K) for colored braid closures.
//!
//! Run with `cargo run --example invariants`.

use holotor::invariants::{diagonal_closure_colors, evaluate, solve_closure_colors, verify_theorem, Link, Selection};
use holotor::numerics::{c, principal_sqrt, r};
use holotor::{BraidWord, Result};

fn main() -> Result<()> {
    let trefoil = BraidWord::new(2, vec![1, 1, 1])?;
    let link = Link::new(trefoil.clone(), diagonal_closure_colors(&trefoil, &[r(4.0)])?);
    let report = evaluate(&link, Selection::All)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));

    let eight = BraidWord::new(3, vec![1, -2, 1, -2])?;
    let colors = solve_closure_colors(&eight, &[principal_sqrt(c(2.5, 1.0))], true, 1)?;
    let link = Link::new(eight, colors);
    let theorem = verify_theorem(&link, 8, 0)?;
    println!("figure-eight, 8 random gauges and eigenvalue choices:");
    for t in &theorem.trials {
        println!("  tau = {:.8}  T = {:.8}  sign {:+}", t.torsion, t.t, t.sign);
    }
    println!("max | |T| - |tau| | / |tau| = {:.1e}, passed: {}", theorem.max_rel_dev, theorem.passed);
    Ok(())
}
