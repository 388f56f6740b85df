//! Randomized verification suites behind `holotor verify`.
//!
//! Every suite draws `trials` independent cases from per-trial seeds, runs
//! them in parallel and records the worst value of each check. A trial whose
//! computation fails counts against every check of the suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::braiding::{
    align_phase, doubled_braiding, functor, mirror_braiding, schur_weyl_matrix, solve_braiding, v0, Functor,
};
use crate::braids::{act_colors_sl2, BraidWord};
use crate::burau::{burau, burau_nice, nice_generator, Variant};
use crate::error::Result;
use crate::holonomy::{
    act_colors_star, biquandle_b, biquandle_b_inv, biquandle_residual, gauge_transform, random_ext_char, random_sl2,
    ExtChar, SL2Elem,
};
use crate::invariants::{
    diagonal_closure_colors, evaluate, solve_closure_colors, trial_seed, Link, Selection, THEOREM_TOL,
};
use crate::numerics::{nullspace, principal_sqrt, Matrix, C64, ZERO};
use crate::uqi::{
    clifford_family, doubled_theta, dual_module, mirrored_clifford_family, mixed_anticommutator_value, simple_module,
    square_anticommutator_values, tensor_rep, Coproduct, Rep,
};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 6] =
    ["braid-relations", "biquandle-ybe", "schur-weyl", "clifford", "braiding-residuals", "torsion-theorem"];

/// Worst observed value of one check; the check passes when it stays below
/// `threshold` and no trial failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max: f64,
    pub threshold: f64,
    pub failures: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Messages of failed trials (at most five are kept).
    pub errors: Vec<String>,
    pub passed: bool,
}

/// Returned for a suite name not in [`SUITES`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownSuite(pub String);

impl std::fmt::Display for UnknownSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown suite '{}'; expected one of {}", self.0, SUITES.join(", "))
    }
}

type Trial = fn(&mut ChaCha8Rng, usize) -> Result<Vec<f64>>;

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.dist(b) / (1.0 + b.max_abs())
}

fn ext_tuple(rng: &mut ChaCha8Rng, n: usize) -> Vec<ExtChar> {
    (0..n).map(|_| random_ext_char(rng)).collect()
}

fn w(n: usize, l: &[i32]) -> Result<BraidWord> {
    BraidWord::new(n, l.to_vec())
}

fn braid_relations(rng: &mut ChaCha8Rng, _: usize) -> Result<Vec<f64>> {
    let n = 4;
    let i = rng.gen_range(1..n as i32 - 1);
    let colors: Vec<SL2Elem> = (0..n).map(|_| random_sl2(rng)).collect();
    let (lhs, rhs) = (w(n, &[i, i + 1, i])?, w(n, &[i + 1, i, i + 1])?);
    let (far_l, far_r) = (w(n, &[1, 3])?, w(n, &[3, 1])?);
    let free = act_colors_sl2(&lhs, &colors)?
        .iter()
        .zip(act_colors_sl2(&rhs, &colors)?)
        .chain(act_colors_sl2(&far_l, &colors)?.iter().zip(act_colors_sl2(&far_r, &colors)?))
        .map(|(a, b)| a.dist(&b))
        .fold(0.0, f64::max);
    let mut burau_res: f64 = 0.0;
    for v in [Variant::Boundary, Variant::Reduced] {
        burau_res = burau_res.max(rel(&burau(&lhs, &colors, v)?.matrix, &burau(&rhs, &colors, v)?.matrix));
        burau_res = burau_res.max(rel(&burau(&far_l, &colors, v)?.matrix, &burau(&far_r, &colors, v)?.matrix));
        let cancel = w(n, &[i, -i])?;
        burau_res = burau_res.max(rel(&burau(&cancel, &colors, v)?.matrix, &Matrix::identity(2 * (n - 1))));
    }
    let xs = ext_tuple(rng, n);
    let nice = rel(&burau_nice(&lhs, &xs)?.matrix, &burau_nice(&rhs, &xs)?.matrix);
    Ok(vec![free, burau_res, nice])
}

fn biquandle_ybe(rng: &mut ChaCha8Rng, _: usize) -> Result<Vec<f64>> {
    let xs = ext_tuple(rng, 3);
    let a = act_colors_star(&w(3, &[1, 2, 1])?, &xs)?;
    let b = act_colors_star(&w(3, &[2, 1, 2])?, &xs)?;
    let ybe = a.iter().zip(&b).map(|(p, q)| p.chi.dist(&q.chi) / (1.0 + q.chi.kappa.norm())).fold(0.0, f64::max);
    let (a4, a3) = biquandle_b(&xs[0].chi, &xs[1].chi)?;
    let defining = biquandle_residual(&xs[0].chi, &xs[1].chi, &a4, &a3);
    let (b1, b2) = biquandle_b_inv(&a4, &a3)?;
    let inverse = b1.dist(&xs[0].chi).max(b2.dist(&xs[1].chi));
    Ok(vec![ybe, defining, inverse])
}

fn schur_weyl(rng: &mut ChaCha8Rng, trial: usize) -> Result<Vec<f64>> {
    let n = 2 + trial % 3;
    let i = rng.gen_range(1..n);
    let xs = ext_tuple(rng, n);
    let (coef, tgt, span) = schur_weyl_matrix(&xs, i)?;
    let expected = nice_generator(i, n, &tgt);
    Ok(vec![coef.dist(&expected) / (1.0 + expected.max_abs()), span])
}

/// Largest deviation of the `α` anticommutators from their scalar values.
pub fn clifford_anticommutator_residual(xs: &[ExtChar]) -> Result<f64> {
    let fam = clifford_family(xs)?;
    let n = xs.len();
    let id = Matrix::identity(1 << n);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let (sq1, sq2) = square_anticommutator_values(xs, j);
        for k in 0..n {
            for mu in 0..2 {
                for nu in 0..2 {
                    let ac = fam.alpha[j][mu].anticommutator(&fam.alpha[k][nu]);
                    let expected = match (j == k, mu, nu) {
                        (false, _, _) => ZERO,
                        (true, 0, 0) => sq1,
                        (true, 1, 1) => sq2,
                        _ => mixed_anticommutator_value(xs, j),
                    };
                    worst = worst.max(ac.dist(&id.scale(expected)) / (1.0 + expected.norm()));
                }
            }
        }
    }
    Ok(worst)
}

/// Largest failure of the `β` operators to supercommute with the generators
/// of the tensor product: `{K, β} = [E, β] = [F̃, β] = {Ω, β} = 0`.
pub fn beta_supercommutation_residual(xs: &[ExtChar]) -> Result<f64> {
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<Rep>>>()?;
    let duals = reps.iter().map(dual_module).collect::<Result<Vec<Rep>>>()?;
    let mut worst: f64 = 0.0;
    for (t, fam) in [
        (tensor_rep(&reps, Coproduct::Delta)?, clifford_family(xs)?),
        (tensor_rep(&duals, Coproduct::DeltaOp)?, mirrored_clifford_family(xs)?),
    ] {
        let (ft, om) = (t.f_tilde(), t.casimir()?);
        for b in fam.beta.iter().flatten() {
            let scale = 1.0 + b.max_abs() * (1.0 + om.max_abs());
            for r in [t.k.anticommutator(b), t.e.commutator(b), ft.commutator(b), om.anticommutator(b)] {
                worst = worst.max(r.max_abs() / scale);
            }
        }
    }
    Ok(worst)
}

fn clifford(rng: &mut ChaCha8Rng, trial: usize) -> Result<Vec<f64>> {
    let n = 2 + trial % 3;
    let xs = ext_tuple(rng, n);
    let anti = clifford_anticommutator_residual(&xs)?;
    let superc = beta_supercommutation_residual(&xs)?;
    let doubled = if n <= 3 {
        let fam = doubled_theta(&xs)?;
        let gens: Vec<&Matrix> = fam.alpha.iter().flatten().collect();
        let mut worst: f64 = 0.0;
        for a in &gens {
            for b in &gens {
                worst = worst.max(a.anticommutator(b).max_abs() / (1.0 + a.max_abs() * b.max_abs()));
            }
        }
        worst
    } else {
        0.0
    };
    Ok(vec![anti, superc, doubled])
}

fn braiding_residuals(rng: &mut ChaCha8Rng, _: usize) -> Result<Vec<f64>> {
    let xs = ext_tuple(rng, 3);
    let cell = solve_braiding(&xs[0], &xs[1])?;
    let bar = mirror_braiding(&xs[0], &xs[1])?;
    let doubled = doubled_braiding(&xs[0], &xs[1])?;
    let v = v0(2);
    let fixed = (&doubled.c * &v).dist(&v) / v.norm();
    let word_a = w(3, &[1, 2, 1])?;
    let word_b = w(3, &[2, 1, 2])?;
    let ta = functor(Functor::Doubled, &word_a, &xs)?.matrix;
    let tb = functor(Functor::Doubled, &word_b, &xs)?.matrix;
    let fa = functor(Functor::Forward, &word_a, &xs)?.matrix;
    let fb = functor(Functor::Forward, &word_b, &xs)?.matrix;
    Ok(vec![
        cell.residual,
        1.0 / cell.gap,
        bar.residual,
        doubled.v0_residual.max(fixed),
        ta.dist(&tb) / (1.0 + ta.max_abs()),
        align_phase(&fa, &fb).1 / (1.0 + fa.max_abs()),
    ])
}

/// A random nonsingular diagonal eigenvalue with `|t|` in `[1.3, 3]`.
fn random_eigenvalue(rng: &mut ChaCha8Rng) -> C64 {
    let modulus: f64 = rng.gen_range(1.3..3.0);
    let arg: f64 = rng.gen_range(-1.0..1.0);
    C64::from_polar(modulus, arg)
}

/// The links exercised by the theorem suite, cycled through by trial.
pub fn theorem_links() -> Vec<(&'static str, BraidWord)> {
    vec![
        ("unknot", BraidWord::new(1, vec![]).expect("valid")),
        ("hopf", BraidWord::new(2, vec![1, 1]).expect("valid")),
        ("trefoil", BraidWord::new(2, vec![1, 1, 1]).expect("valid")),
        ("figure-eight", BraidWord::new(3, vec![1, -2, 1, -2]).expect("valid")),
    ]
}

/// A random closure coloring of `word`: conjugated diagonal colors for links
/// with abelian groups (one or two strands with a pure permutation), an
/// irreducible solution of the closure equations otherwise.
pub fn random_closure_colors(word: &BraidWord, rng: &mut ChaCha8Rng) -> Result<Vec<SL2Elem>> {
    let comps = crate::braids::closure_components(word).len();
    let ts: Vec<C64> = (0..comps).map(|_| random_eigenvalue(rng)).collect();
    let abelian = word.strands() == 1 || comps == word.strands();
    let colors = if abelian {
        diagonal_closure_colors(word, &ts)?
    } else {
        let ms: Vec<C64> = ts.iter().map(|&t| principal_sqrt(t)).collect();
        solve_closure_colors(word, &ms, true, rng.gen())?
    };
    Ok(gauge_transform(&colors, &random_sl2(rng)))
}

fn torsion_theorem(rng: &mut ChaCha8Rng, trial: usize) -> Result<Vec<f64>> {
    let links = theorem_links();
    let (_, word) = &links[trial % links.len()];
    let colors = random_closure_colors(word, rng)?;
    let report = evaluate(&Link::new(word.clone(), colors), Selection::All)?;
    let (tau, t) = (report.torsion.expect("selected"), report.t.expect("selected"));
    let modulus = (t.norm() - tau.norm()).abs() / tau.norm();
    let signed = (t - tau).norm().min((t + tau).norm()) / tau.norm();
    Ok(vec![modulus, signed])
}

struct SuiteDef {
    trial: Trial,
    checks: &'static [(&'static str, f64)],
}

fn definition(name: &str) -> Option<SuiteDef> {
    Some(match name {
        "braid-relations" => SuiteDef {
            trial: braid_relations,
            checks: &[("color-action", 1e-9), ("burau-sl2", 1e-9), ("burau-nice", 1e-9)],
        },
        "biquandle-ybe" => SuiteDef {
            trial: biquandle_ybe,
            checks: &[("yang-baxter", 1e-9), ("defining-relation", 1e-9), ("inverse", 1e-9)],
        },
        "schur-weyl" => SuiteDef { trial: schur_weyl, checks: &[("nice-generator", 1e-9), ("span", 1e-9)] },
        "clifford" => SuiteDef {
            trial: clifford,
            checks: &[("anticommutators", 1e-9), ("supercommutation", 1e-9), ("doubled-exterior", 1e-9)],
        },
        "braiding-residuals" => SuiteDef {
            trial: braiding_residuals,
            checks: &[
                ("intertwining", 1e-9),
                ("inverse-gap", 1e-6),
                ("mirror-intertwining", 1e-8),
                ("v0-invariance", 1e-9),
                ("ybe-doubled", 1e-8),
                ("ybe-forward-up-to-i^k", 1e-8),
            ],
        },
        "torsion-theorem" => SuiteDef { trial: torsion_theorem, checks: &[("modulus", THEOREM_TOL), ("sign", THEOREM_TOL)] },
        _ => return None,
    })
}

/// Run a named suite with `trials` cases derived from `seed`.
pub fn run_suite(name: &str, trials: usize, seed: u64) -> std::result::Result<SuiteReport, UnknownSuite> {
    let def = definition(name).ok_or_else(|| UnknownSuite(name.to_string()))?;
    let outcomes: Vec<Result<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
            (def.trial)(&mut rng, t)
        })
        .collect();
    let mut checks: Vec<Check> = def
        .checks
        .iter()
        .map(|&(name, threshold)| Check { name: name.into(), max: 0.0, threshold, failures: 0, passed: true })
        .collect();
    let mut errors = Vec::new();
    for (t, o) in outcomes.iter().enumerate() {
        match o {
            Ok(values) => {
                for (check, &v) in checks.iter_mut().zip(values) {
                    check.max = if v.is_nan() { f64::INFINITY } else { check.max.max(v) };
                }
            }
            Err(e) => {
                for check in &mut checks {
                    check.failures += 1;
                }
                if errors.len() < 5 {
                    errors.push(format!("trial {t}: {e}"));
                }
            }
        }
    }
    for check in &mut checks {
        check.passed = check.failures == 0 && check.max < check.threshold;
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { suite: name.to_string(), trials, seed, checks, errors, passed })
}

/// Dimension of the `±ω` eigenspaces of the Casimir of `⊗ V(xⱼ)`, where `ω²`
/// is the Casimir square of the product character.
pub fn casimir_multiplicities(xs: &[ExtChar], tol: f64) -> Result<(usize, usize)> {
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    let om = tensor_rep(&reps, Coproduct::Delta)?.casimir()?;
    let prod = xs.iter().skip(1).fold(xs[0].chi, |acc, x| acc.mul(&x.chi));
    let w = principal_sqrt(prod.casimir_sq());
    let id = Matrix::identity(om.rows());
    let plus = nullspace(&(&om - &id.scale(w)), tol).dim();
    let minus = nullspace(&(&om - &id.scale(-w)), tol).dim();
    Ok((plus, minus))
}
