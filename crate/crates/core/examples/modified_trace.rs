//! Modified traces on tensor products of simple modules: renormalized
//! dimensions and the agreement of the two trace constructions.
//!
//! Run with `cargo run --example modified_trace`.

use holotor::holonomy::random_ext_char;
use holotor::invariants::{mtrace_C, mtrace_D, mtrace_via_trace_tuple, str_exterior_oracle};
use holotor::numerics::{c, Matrix, ONE};
use holotor::uqi::{intertwiners, simple_module, tensor_rep, Coproduct};
use holotor::{ExtChar, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_ext_char(&mut rng);
    let w = x.omega();
    println!("omega = mu - 1/mu = {w:.6}");
    println!("t(id_V)        = {:.6}   1/omega   = {:.6}", mtrace_C(&Matrix::identity(2), &[x])?, ONE / w);
    println!("t(id_V (x) V*) = {:.6}   1/omega^2 = {:.6}", mtrace_D(&Matrix::identity(4), &[x])?, ONE / (w * w));

    // a random module endomorphism of V(x1) ⊗ V(x2)
    let xs: Vec<ExtChar> = (0..2).map(|_| random_ext_char(&mut rng)).collect();
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    let v = tensor_rep(&reps, Coproduct::Delta)?;
    let (basis, _) = intertwiners(&v, &v, 1e-9)?;
    println!("End(V1 (x) V2) has dimension {}", basis.len());
    let f = basis
        .iter()
        .fold(Matrix::zeros(4, 4), |acc, b| &acc + &b.scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    println!("partial trace: {:.10}", mtrace_C(&f, &xs)?);
    println!("trace tuple:   {:.10}", mtrace_via_trace_tuple(&f, &xs)?);

    // supertrace of an exterior power representation
    let a = Matrix::from_fn(4, 4, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    println!("str(Lambda A) = {:.10}", str_exterior_oracle(&a)?);
    println!("det(1 - A)    = {:.10}", (&Matrix::identity(4) - &a).det()?);
    Ok(())
}
