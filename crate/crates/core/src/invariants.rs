//! Modified traces and the link invariants built from them.
//!
//! Three traces are provided for endomorphisms of tensor products of simple
//! modules:
//!
//! * [`mtrace_C`] on `V(x₁) ⊗ ⋯ ⊗ V(xₙ)` with pivot `K⁻¹` and
//!   renormalized dimension `1/ω`,
//! * [`mtrace_Cbar`] on the duals `V(x₁)* ⊗ ⋯` (opposite coproduct, pivot
//!   `K`),
//! * [`mtrace_D`] on the doubled factors `V(xⱼ) ⊠ V(xⱼ)*` with pivot
//!   `K⁻¹ ⊠ K` and dimension `1/ω²`.
//!
//! [`mtrace_via_trace_tuple`] computes the trace on `𝒞` a second way, by
//! lifting through the projective cover `P₀` and reading off the socle
//! coefficient.
//!
//! The link pipeline ([`evaluate`]) validates a colored braid, stabilizes,
//! searches for an admissible gauge, assigns fractional eigenvalues per
//! component and evaluates the torsion, `𝒯`, `ℱ`, `ℱ̄` and `𝒦`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::braiding::{functor_f, functor_fbar, functor_t};
use crate::braids::{check_len, closure_components, stabilize_nonsingular, total_holonomy, BraidWord};
use crate::burau::{closure_residual, det_one_minus, torsion_report, CLOSURE_TOL};
use crate::error::{Error, Result};
use crate::holonomy::{
    default_mu, factorize_tuple, gauge_transform, is_admissible, random_sl2, ExtChar, SL2Elem, StarChar,
    GAUGE_ATTEMPTS,
};
use crate::numerics::{c, eig2, kron, kron_all, Matrix, C64, ONE, ZERO};
use crate::uqi::{dual_module, intertwiner_system, p0_module, simple_module, tensor_rep, Coproduct, Rep};

/// Off-scalar residue allowed in a modified trace, relative to `‖f‖`.
pub const SCALAR_TOL: f64 = 1e-7;

/// Relative tolerance for the torsion theorem checks.
pub const THEOREM_TOL: f64 = 1e-6;

/// Largest `N` accepted by [`str_exterior_oracle`].
pub const EXTERIOR_MAX: usize = 12;

// ---------------------------------------------------------------------------
// partial traces

fn check_factors(f: &Matrix, factor_dims: &[usize], pivots: &[Matrix]) -> Result<usize> {
    let total: usize = factor_dims.iter().product();
    if !f.is_square() || f.rows() != total {
        return Err(Error::Dimension(format!(
            "partial trace: matrix is {}x{}, factors multiply to {total}",
            f.rows(),
            f.cols()
        )));
    }
    if pivots.len() > factor_dims.len() {
        return Err(Error::Dimension("more pivots than factors".into()));
    }
    Ok(total)
}

/// Trace out one trailing factor: `out[a,b] = Σ f[(a,k),(b,l)] piv[l,k]`.
fn trace_last(f: &Matrix, rest: usize, d: usize, piv: &Matrix) -> Matrix {
    Matrix::from_fn(rest, rest, |a, b| {
        let mut s = ZERO;
        for k in 0..d {
            for l in 0..d {
                let p = piv[(l, k)];
                if p != ZERO {
                    s += f[(a * d + k, b * d + l)] * p;
                }
            }
        }
        s
    })
}

/// Trace out one leading factor: `out[a,b] = Σ f[(k,a),(l,b)] piv[l,k]`.
fn trace_first(f: &Matrix, d: usize, rest: usize, piv: &Matrix) -> Matrix {
    Matrix::from_fn(rest, rest, |a, b| {
        let mut s = ZERO;
        for k in 0..d {
            for l in 0..d {
                let p = piv[(l, k)];
                if p != ZERO {
                    s += f[(k * rest + a, l * rest + b)] * p;
                }
            }
        }
        s
    })
}

/// Right partial quantum trace over the last `pivots.len()` factors. The
/// `j`th pivot belongs to factor `factor_dims.len() − pivots.len() + j`.
pub fn ptr_right(f: &Matrix, factor_dims: &[usize], pivots: &[Matrix]) -> Result<Matrix> {
    let mut rest = check_factors(f, factor_dims, pivots)?;
    let mut out = f.clone();
    let first = factor_dims.len() - pivots.len();
    for (j, piv) in pivots.iter().enumerate().rev() {
        let d = factor_dims[first + j];
        if piv.rows() != d || piv.cols() != d {
            return Err(Error::Dimension(format!("pivot {j} is {}x{}, factor has dim {d}", piv.rows(), piv.cols())));
        }
        rest /= d;
        out = trace_last(&out, rest, d, piv);
    }
    Ok(out)
}

/// Left partial quantum trace over the first `pivots.len()` factors.
pub fn ptr_left(f: &Matrix, factor_dims: &[usize], pivots: &[Matrix]) -> Result<Matrix> {
    let mut rest = check_factors(f, factor_dims, pivots)?;
    let mut out = f.clone();
    for (j, piv) in pivots.iter().enumerate() {
        let d = factor_dims[j];
        if piv.rows() != d || piv.cols() != d {
            return Err(Error::Dimension(format!("pivot {j} is {}x{}, factor has dim {d}", piv.rows(), piv.cols())));
        }
        rest /= d;
        out = trace_first(&out, d, rest, piv);
    }
    Ok(out)
}

/// The scalar `λ` with `m = λ·I`, or [`Error::TraceNotScalar`] when the
/// off-scalar part exceeds [`SCALAR_TOL`] times `scale`.
fn scalar_residue(m: &Matrix, scale: f64) -> Result<C64> {
    let lam = m.trace() / m.rows() as f64;
    let residual = (m - &Matrix::identity(m.rows()).scale(lam)).max_abs();
    if residual > SCALAR_TOL * scale.max(1e-300) {
        return Err(Error::TraceNotScalar { residual });
    }
    Ok(lam)
}

fn modified_trace(f: &Matrix, dims: &[usize], pivots: &[Matrix], d_first: C64) -> Result<C64> {
    if dims.is_empty() {
        return Err(Error::Dimension("modified trace of an empty tensor product".into()));
    }
    let rest = ptr_right(f, dims, &pivots[1..])?;
    Ok(d_first * scalar_residue(&rest, f.norm())?)
}

/// Modified trace on `⊗ⱼ V(xⱼ)`.
#[allow(non_snake_case)]
pub fn mtrace_C(f: &Matrix, xs: &[ExtChar]) -> Result<C64> {
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    let pivots = reps.iter().map(Rep::k_inv).collect::<Result<Vec<_>>>()?;
    modified_trace(f, &vec![2; xs.len()], &pivots, ONE / xs[0].omega())
}

/// Modified trace on `⊗ⱼ V(xⱼ)*` (the mirror category).
#[allow(non_snake_case)]
pub fn mtrace_Cbar(f: &Matrix, xs: &[ExtChar]) -> Result<C64> {
    let pivots = xs
        .iter()
        .map(|x| Ok(dual_module(&simple_module(x)?)?.k))
        .collect::<Result<Vec<_>>>()?;
    modified_trace(f, &vec![2; xs.len()], &pivots, ONE / xs[0].omega())
}

/// Modified trace on `⊗ⱼ V(xⱼ) ⊠ V(yⱼ)*`, with renormalized dimension
/// `1/(ω(x₁) ω(y₁))` on the first factor.
#[allow(non_snake_case)]
pub fn mtrace_D_mixed(f: &Matrix, pairs: &[(ExtChar, ExtChar)]) -> Result<C64> {
    let pivots = pairs
        .iter()
        .map(|(x, y)| Ok(kron(&simple_module(x)?.k_inv()?, &dual_module(&simple_module(y)?)?.k)))
        .collect::<Result<Vec<_>>>()?;
    let (x1, y1) = pairs.first().ok_or_else(|| Error::Dimension("empty tensor product".into()))?;
    modified_trace(f, &vec![4; pairs.len()], &pivots, ONE / (x1.omega() * y1.omega()))
}

/// Modified trace on `⊗ⱼ V(xⱼ) ⊠ V(xⱼ)*`.
#[allow(non_snake_case)]
pub fn mtrace_D(f: &Matrix, xs: &[ExtChar]) -> Result<C64> {
    let pairs: Vec<_> = xs.iter().map(|x| (*x, *x)).collect();
    mtrace_D_mixed(f, &pairs)
}

// ---------------------------------------------------------------------------
// trace tuple

/// Index of `z` in the `x, y₁, y₂, z` basis of `P₀`.
const P0_Z: usize = 3;

/// A module map `τ: V → P₀ ⊗ V` with `(π ⊗ id) τ = id`, where `π` reads the
/// `x` coordinate.
pub fn p0_lift(v: &Rep, coproduct: Coproduct) -> Result<Matrix> {
    let d = v.dim();
    let target = tensor_rep(&[p0_module(), v.clone()], coproduct)?;
    let sys = intertwiner_system(v, &target)?;
    let unknowns = 4 * d * d;
    let mut normal = Matrix::zeros(d * d, unknowns);
    let mut rhs = Matrix::zeros(sys.rows() + d * d, 1);
    for a in 0..d {
        for b in 0..d {
            normal[(a * d + b, a * d + b)] = ONE;
            rhs[(sys.rows() + a * d + b, 0)] = if a == b { ONE } else { ZERO };
        }
    }
    let full = Matrix::vstack(&[sys, normal])?;
    let x = full.lstsq(&rhs, 1e-12)?;
    let residual = (&(&full * &x) - &rhs).max_abs();
    if residual > 1e-8 {
        return Err(Error::LiftFailed { residual });
    }
    Ok(Matrix::from_fn(4 * d, d, |r, col| x[(r * d + col, 0)]))
}

/// `⟨tr^r(τ f)⟩`: lift the first factor through `P₀`, take the right trace
/// over the whole tensor product and read off the `z` coefficient. In the
/// basis of [`p0_module`] with pivot `K⁻¹` the identity of `V(x)` produces
/// `z/(2ω)`, so the bracket is twice the coefficient.
fn trace_tuple_bracket(f: &Matrix, reps: &[Rep], coproduct: Coproduct, pivots: &[Matrix]) -> Result<C64> {
    let tau1 = p0_lift(&reps[0], coproduct)?;
    let rest_dim: usize = reps[1..].iter().map(Rep::dim).product();
    let tau = kron(&tau1, &Matrix::identity(rest_dim));
    let g = &tau * f;
    let piv = kron_all(pivots.iter());
    let d = f.rows();
    let u = trace_last(&Matrix::from_fn(4 * d, 4 * d, |r, col| if col < d { g[(r, col)] } else { ZERO }), 4, d, &piv);
    // only the first column of the 4x4 block carries the traced vector
    let vec: Vec<C64> = (0..4).map(|p| u[(p, 0)]).collect();
    let zc = vec[P0_Z];
    let off = vec[..P0_Z].iter().map(|z| z.norm()).fold(0.0, f64::max);
    if off > SCALAR_TOL * (f.norm() + zc.norm()).max(1e-300) {
        return Err(Error::TraceNotScalar { residual: off });
    }
    Ok(zc * 2.0)
}

/// The modified trace on `⊗ⱼ V(xⱼ)` via the trace tuple `(P₀, 2ι, π)`.
pub fn mtrace_via_trace_tuple(f: &Matrix, xs: &[ExtChar]) -> Result<C64> {
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    let pivots = reps.iter().map(Rep::k_inv).collect::<Result<Vec<_>>>()?;
    trace_tuple_bracket(f, &reps, Coproduct::Delta, &pivots)
}

/// The same on `⊗ⱼ V(xⱼ)*` in the mirror category.
pub fn mtrace_via_trace_tuple_bar(f: &Matrix, xs: &[ExtChar]) -> Result<C64> {
    let reps = xs
        .iter()
        .map(|x| dual_module(&simple_module(x)?))
        .collect::<Result<Vec<_>>>()?;
    let pivots: Vec<Matrix> = reps.iter().map(|r| r.k.clone()).collect();
    trace_tuple_bracket(f, &reps, Coproduct::DeltaOp, &pivots)
}

// ---------------------------------------------------------------------------
// exterior algebra oracle

/// Supertrace of the induced action of `A` on the exterior algebra `Λ(ℂᴺ)`,
/// graded by degree. The action is assembled column by column, `Λ A (e_S)`
/// being the wedge of the images of the basis vectors in `S`.
pub fn str_exterior_oracle(a: &Matrix) -> Result<C64> {
    if !a.is_square() {
        return Err(Error::Dimension("exterior power of a non-square matrix".into()));
    }
    let n = a.rows();
    if n > EXTERIOR_MAX {
        return Err(Error::TooLarge(n));
    }
    let size = 1usize << n;
    let mut cols: Vec<Vec<C64>> = vec![Vec::new(); size];
    cols[0] = {
        let mut v = vec![ZERO; size];
        v[0] = ONE;
        v
    };
    for mask in 1..size {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let prev = &cols[mask & !(1 << top)];
        let mut out = vec![ZERO; size];
        for (t, &coef) in prev.iter().enumerate() {
            if coef == ZERO {
                continue;
            }
            for k in 0..n {
                if t & (1 << k) != 0 {
                    continue;
                }
                let w = a[(k, top)];
                if w == ZERO {
                    continue;
                }
                // e_T ∧ e_k: move e_k past the elements of T above k
                let above = (t >> (k + 1)).count_ones();
                let sign = if above % 2 == 0 { 1.0 } else { -1.0 };
                out[t | (1 << k)] += coef * w * sign;
            }
        }
        cols[mask] = out;
    }
    Ok((0..size)
        .map(|s| {
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            cols[s][s] * sign
        })
        .sum())
}

// ---------------------------------------------------------------------------
// closure colors

/// `a⁻¹ b a` for unnormalized 2x2 matrices, inverse by adjugate.
fn raw_inv(m: &Matrix) -> Matrix {
    let d = m.det().unwrap_or(ZERO);
    Matrix::from_rows(&[[m[(1, 1)], -m[(0, 1)]], [-m[(1, 0)], m[(0, 0)]]]).scale(ONE / d)
}

fn act_raw(word: &BraidWord, g: &[Matrix]) -> Vec<Matrix> {
    let mut g = g.to_vec();
    for &l in word.letters() {
        let i = l.unsigned_abs() as usize - 1;
        let (a, b) = (g[i].clone(), g[i + 1].clone());
        if l > 0 {
            g[i] = &(&raw_inv(&a) * &b) * &a;
            g[i + 1] = a;
        } else {
            g[i] = b.clone();
            g[i + 1] = &(&b * &a) * &raw_inv(&b);
        }
    }
    g
}

struct ClosureProblem<'a> {
    word: &'a BraidWord,
    traces: Vec<C64>,
    first: Matrix,
}

impl ClosureProblem<'_> {
    fn unpack(&self, z: &[C64]) -> Vec<Matrix> {
        let mut g = vec![self.first.clone()];
        g.extend(z.chunks(4).map(|q| Matrix::from_rows(&[[q[0], q[1]], [q[2], q[3]]])));
        g
    }

    fn residual(&self, z: &[C64]) -> Vec<C64> {
        let g = self.unpack(z);
        let moved = act_raw(self.word, &g);
        let mut out: Vec<C64> = moved.iter().zip(&g).flat_map(|(a, b)| (a - b).into_entries()).collect();
        for (j, gj) in g.iter().enumerate().skip(1) {
            out.push(gj.det().unwrap_or(ZERO) - ONE);
            out.push(gj.trace() - self.traces[j]);
        }
        out
    }
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sum_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Damped Gauss–Newton on a holomorphic residual, Jacobian by central
/// differences.
fn levenberg_marquardt(p: &ClosureProblem, mut z: Vec<C64>, iters: usize) -> (Vec<C64>, f64) {
    let mut r = p.residual(&z);
    let mut lambda = 1e-3_f64;
    for _ in 0..iters {
        if max_norm(&r) < 1e-14 {
            break;
        }
        let m = z.len();
        let mut jac = Matrix::zeros(r.len() + m, m);
        for k in 0..m {
            let h = 1e-6 * (1.0 + z[k].norm());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let (rp, rm) = (p.residual(&zp), p.residual(&zm));
            for (row, (a, b)) in rp.iter().zip(&rm).enumerate() {
                jac[(row, k)] = (a - b) / (2.0 * h);
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            for k in 0..m {
                jac[(r.len() + k, k)] = c(lambda.sqrt(), 0.0);
            }
            let mut rhs = Matrix::zeros(r.len() + m, 1);
            for (row, v) in r.iter().enumerate() {
                rhs[(row, 0)] = -v;
            }
            let Ok(step) = jac.lstsq(&rhs, 1e-14) else { break };
            let trial: Vec<C64> = z.iter().enumerate().map(|(k, v)| v + step[(k, 0)]).collect();
            let rt = p.residual(&trial);
            if rt.iter().all(|v| v.is_finite()) && sum_sq(&rt) < sum_sq(&r) {
                z = trial;
                r = rt;
                lambda = (lambda / 4.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 8.0;
        }
        if !improved {
            break;
        }
    }
    let res = max_norm(&r);
    (z, res)
}

/// Colors fixed by `word` with prescribed meridian eigenvalue `mⱼ` on each
/// closure component (components ordered as in
/// [`closure_components`](crate::braids::closure_components)).
///
/// Strand 1 is pinned to `[[m, 1], [0, 1/m]]`; the remaining entries are
/// found by seeded least-squares restarts. With `irreducible` set, solutions
/// in which every color commutes with the first are rejected.
pub fn solve_closure_colors(word: &BraidWord, ms: &[C64], irreducible: bool, seed: u64) -> Result<Vec<SL2Elem>> {
    let n = word.strands();
    let comps = closure_components(word);
    if ms.len() != comps.len() {
        return Err(Error::Dimension(format!("{} eigenvalues for {} components", ms.len(), comps.len())));
    }
    let mut traces = vec![ZERO; n];
    for (comp, &m) in comps.iter().zip(ms) {
        for &s in comp {
            traces[s - 1] = m + ONE / m;
        }
    }
    let m1 = ms[0];
    let first = Matrix::from_rows(&[[m1, ONE], [ZERO, ONE / m1]]);
    let problem = ClosureProblem { word, traces, first: first.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..40 {
        let z0: Vec<C64> = (0..4 * (n - 1)).map(|_| c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
        let (z, res) = levenberg_marquardt(&problem, z0, 400);
        best = best.min(res);
        if res > 1e-11 {
            continue;
        }
        let gs = problem.unpack(&z);
        if irreducible && n > 1 && gs.iter().all(|g| first.commutator(g).max_abs() < 1e-6) {
            continue;
        }
        let colors = gs.iter().map(SL2Elem::normalized).collect::<Result<Vec<_>>>()?;
        let check = closure_residual(word, &colors)?;
        if check < 1e-10 {
            return Ok(colors);
        }
        best = best.min(check);
    }
    Err(Error::ClosureSolveFailed { residual: best })
}

/// Abelian closure colors: strands of component `k` all carry `diag(tₖ)`.
pub fn diagonal_closure_colors(word: &BraidWord, ts: &[C64]) -> Result<Vec<SL2Elem>> {
    let comps = closure_components(word);
    if ts.len() != comps.len() {
        return Err(Error::Dimension(format!("{} eigenvalues for {} components", ts.len(), comps.len())));
    }
    let mut out = vec![SL2Elem::identity(); word.strands()];
    for (comp, &t) in comps.iter().zip(ts) {
        for &s in comp {
            out[s - 1] = SL2Elem::diag(t);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// link pipeline

/// Whether a pipeline step may modify the input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Auto,
    Off,
}

/// Evaluation options carried by a link.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    pub tol: f64,
    pub seed: u64,
    pub gauge: Policy,
    pub stabilize: Policy,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol: 1e-9, seed: 0, gauge: Policy::Auto, stabilize: Policy::Auto }
    }
}

/// A colored braid whose closure is the link to evaluate.
#[derive(Clone, Debug)]
pub struct Link {
    pub word: BraidWord,
    pub colors: Vec<SL2Elem>,
    /// One fractional eigenvalue per closure component; defaults apply when
    /// absent.
    pub mu: Option<Vec<C64>>,
    pub options: Options,
}

impl Link {
    pub fn new(word: BraidWord, colors: Vec<SL2Elem>) -> Self {
        Link { word, colors, mu: None, options: Options::default() }
    }

    pub fn with_mu(mut self, mu: Vec<C64>) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_options(mut self, options: Options) -> Self {
        self.options = options;
        self
    }
}

/// Which invariants to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Torsion,
    T,
    F,
    K,
    All,
}

impl Selection {
    fn torsion(self) -> bool {
        matches!(self, Selection::Torsion | Selection::All)
    }
    fn t(self) -> bool {
        matches!(self, Selection::T | Selection::K | Selection::All)
    }
    fn f(self) -> bool {
        matches!(self, Selection::F | Selection::K | Selection::All)
    }
    fn k(self) -> bool {
        matches!(self, Selection::K | Selection::All)
    }
}

/// A value known only up to a power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseValue {
    /// The representative produced by determinant normalization.
    pub value: C64,
    pub modulus: f64,
    /// `arg(value)` reduced into `[0, π/2)`: the well-defined part of the phase.
    pub phase: f64,
    /// The quadrant `k` with `value = iᵏ · modulus · e^{i·phase}`.
    pub phase_class: u8,
}

impl PhaseValue {
    pub fn new(value: C64) -> Self {
        let quarter = std::f64::consts::FRAC_PI_2;
        let arg = value.arg().rem_euclid(4.0 * quarter);
        let mut k = (arg / quarter).floor();
        let mut phase = arg - k * quarter;
        if phase >= quarter - 1e-12 {
            phase = 0.0;
            k += 1.0;
        }
        PhaseValue { value, modulus: value.norm(), phase, phase_class: (k as u8) % 4 }
    }
}

/// Intermediate data of an evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub closure_residual: f64,
    pub stabilizations: usize,
    /// Conjugating matrix applied to the colors, if not the identity.
    pub gauge: Option<[[C64; 2]; 2]>,
    /// Fractional eigenvalue per closure component.
    pub mu: Vec<C64>,
    /// Distance of the functor's far-end colors from its source colors.
    pub target_residual: Option<f64>,
    /// `det(1 − ℬ(β))` with the reduced Burau matrix.
    pub burau_det: Option<C64>,
}

/// Result of [`evaluate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub torsion: Option<C64>,
    #[serde(rename = "T")]
    pub t: Option<C64>,
    #[serde(rename = "F")]
    pub f: Option<PhaseValue>,
    #[serde(rename = "Fbar")]
    pub f_bar: Option<PhaseValue>,
    #[serde(rename = "K")]
    pub k: Option<PhaseValue>,
    pub diagnostics: Diagnostics,
}

/// Validated colored braid ready for the quantum evaluation.
struct Prepared {
    word: BraidWord,
    colors: Vec<SL2Elem>,
    stabilizations: usize,
    closure_residual: f64,
    mus: Vec<C64>,
}

/// The default fractional eigenvalue of a meridian with color `g`; it depends
/// only on the trace, so all strands of a component agree.
pub fn meridian_default_mu(g: &SL2Elem) -> C64 {
    let (lam, _) = eig2(g.matrix()).expect("2x2 by construction");
    default_mu(&StarChar::diagonal(lam))
}

fn prepare(link: &Link) -> Result<Prepared> {
    let tol = link.options.tol;
    check_len(&link.word, link.colors.len())?;
    for (index, g) in link.colors.iter().enumerate() {
        if g.is_singular(tol) {
            return Err(Error::SingularMeridian { index });
        }
    }
    let closure = closure_residual(&link.word, &link.colors)?;
    if closure > CLOSURE_TOL {
        return Err(Error::NotClosure { residual: closure });
    }
    let (word, colors, stabilizations) = if total_holonomy(&link.colors).is_singular(tol) {
        if link.options.stabilize == Policy::Off {
            return Err(Error::SingularTotalHolonomy);
        }
        let s = stabilize_nonsingular(&link.word, &link.colors, tol)?;
        (s.word, s.colors, s.added)
    } else {
        (link.word.clone(), link.colors.clone(), 0)
    };
    let comps = closure_components(&word);
    let mus = match &link.mu {
        Some(m) => {
            // stabilization merges the new strand into the last component
            if m.len() != comps.len() {
                return Err(Error::Dimension(format!("{} values of mu for {} components", m.len(), comps.len())));
            }
            m.clone()
        }
        None => comps.iter().map(|comp| meridian_default_mu(&colors[comp[0] - 1])).collect(),
    };
    Ok(Prepared { word, colors, stabilizations, closure_residual: closure, mus })
}

fn ext_chars(p: &Prepared, colors: &[SL2Elem]) -> Result<Vec<ExtChar>> {
    let chis = factorize_tuple(colors)?;
    let comps = closure_components(&p.word);
    let mut mu_of = vec![ONE; p.word.strands()];
    for (comp, &m) in comps.iter().zip(&p.mus) {
        for &s in comp {
            mu_of[s - 1] = m;
        }
    }
    chis.into_iter().zip(mu_of).map(|(chi, mu)| ExtChar::new(chi, mu, 1e-7)).collect()
}

fn retryable(e: &Error) -> bool {
    matches!(
        e.root(),
        Error::InadmissibleTuple { .. }
            | Error::InadmissibleCrossing { .. }
            | Error::InadmissibleElement
            | Error::DegenerateCharacter
            | Error::LocalizationLocus
            | Error::NormalizationFailure
            | Error::BraidingNotUnique { .. }
    )
}

/// Run `eval` on the extended characters of the first admissible gauge: the
/// identity, then seeded random conjugations when the policy allows.
fn with_gauge<T>(
    p: &Prepared,
    options: &Options,
    mut eval: impl FnMut(&[ExtChar]) -> Result<T>,
) -> Result<(T, Option<SL2Elem>)> {
    let tol = options.tol;
    let attempt = |colors: &[SL2Elem], eval: &mut dyn FnMut(&[ExtChar]) -> Result<T>| -> Result<T> {
        if !is_admissible(colors, 10.0 * tol) {
            return Err(Error::InadmissibleTuple { index: 0 });
        }
        eval(&ext_chars(p, colors)?)
    };
    match attempt(&p.colors, &mut eval) {
        Ok(v) => return Ok((v, None)),
        Err(e) if options.gauge == Policy::Off || !retryable(&e) => return Err(e),
        Err(_) => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..GAUGE_ATTEMPTS {
        let g = random_sl2(&mut rng);
        match attempt(&gauge_transform(&p.colors, &g), &mut eval) {
            Ok(v) => return Ok((v, Some(g))),
            Err(e) if !retryable(&e) => return Err(e),
            Err(_) => {}
        }
    }
    Err(Error::NoAdmissibleGauge { attempts: GAUGE_ATTEMPTS })
}

fn target_residual(xs: &[ExtChar], target: &[ExtChar]) -> f64 {
    xs.iter()
        .zip(target)
        .map(|(a, b)| a.chi.dist(&b.chi).max((a.mu - b.mu).norm()))
        .fold(0.0, f64::max)
}

struct Quantum {
    t: Option<C64>,
    f: Option<C64>,
    f_bar: Option<C64>,
    target_residual: f64,
}

fn quantum_values(xs: &[ExtChar], word: &BraidWord, sel: Selection) -> Result<Quantum> {
    let mut q = Quantum { t: None, f: None, f_bar: None, target_residual: 0.0 };
    if sel.t() {
        let v = functor_t(word, xs)?;
        q.target_residual = q.target_residual.max(target_residual(xs, &v.target));
        q.t = Some(mtrace_D(&v.matrix, xs)?);
    }
    if sel.f() {
        let v = functor_f(word, xs)?;
        q.target_residual = q.target_residual.max(target_residual(xs, &v.target));
        q.f = Some(mtrace_C(&v.matrix, xs)?);
        let v = functor_fbar(word, xs)?;
        q.f_bar = Some(mtrace_Cbar(&v.matrix, xs)?);
    }
    Ok(q)
}

/// Evaluate the selected invariants of a colored link.
pub fn evaluate(link: &Link, sel: Selection) -> Result<InvariantReport> {
    let p = prepare(link)?;
    let mut report = InvariantReport {
        torsion: None,
        t: None,
        f: None,
        f_bar: None,
        k: None,
        diagnostics: Diagnostics {
            closure_residual: p.closure_residual,
            stabilizations: p.stabilizations,
            gauge: None,
            mu: p.mus.clone(),
            target_residual: None,
            burau_det: None,
        },
    };
    if sel.torsion() {
        let t = torsion_report(&p.word, &p.colors, false, link.options.tol)?;
        report.torsion = Some(t.value);
        report.diagnostics.burau_det = Some(t.numerator);
    }
    if sel.t() || sel.f() {
        let (q, gauge) = with_gauge(&p, &link.options, |xs| quantum_values(xs, &p.word, sel))?;
        report.t = q.t;
        report.f = q.f.map(PhaseValue::new);
        report.f_bar = q.f_bar.map(PhaseValue::new);
        if sel.k() {
            if let (Some(t), Some(f), Some(fb)) = (q.t, q.f, q.f_bar) {
                report.k = Some(PhaseValue::new(t / (f * fb)));
            }
        }
        report.diagnostics.gauge = gauge.map(|g| [[g.get(0, 0), g.get(0, 1)], [g.get(1, 0), g.get(1, 1)]]);
        report.diagnostics.target_residual = Some(q.target_residual);
    }
    Ok(report)
}

/// The torsion of the closure (defined up to sign).
pub fn invariant_torsion(link: &Link) -> Result<C64> {
    Ok(evaluate(link, Selection::Torsion)?.torsion.expect("selected"))
}

/// The doubled invariant `𝒯`.
#[allow(non_snake_case)]
pub fn invariant_T(link: &Link) -> Result<C64> {
    Ok(evaluate(link, Selection::T)?.t.expect("selected"))
}

/// `ℱ` up to a power of `i`.
#[allow(non_snake_case)]
pub fn invariant_F(link: &Link) -> Result<PhaseValue> {
    Ok(evaluate(link, Selection::F)?.f.expect("selected"))
}

/// `𝒦 = 𝒯 / (ℱ ℱ̄)` up to a power of `i`.
#[allow(non_snake_case)]
pub fn invariant_K(link: &Link) -> Result<PhaseValue> {
    Ok(evaluate(link, Selection::K)?.k.expect("selected"))
}

/// `det(1 − ℬ(β)) / (tr h − 2)` with `h` the total holonomy, i.e. the
/// Burau determinant over `(μ − μ⁻¹)²` for a fractional eigenvalue `μ` of
/// `h`. Computed from the Burau side only.
pub fn burau_side(link: &Link) -> Result<C64> {
    let p = prepare(link)?;
    let num = if p.word.strands() < 2 {
        ONE
    } else {
        det_one_minus(&crate::burau::burau_reduced(&p.word, &p.colors)?.matrix)?
    };
    Ok(num / (total_holonomy(&p.colors).trace() - 2.0))
}

/// One randomized comparison of `𝒯` and `τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremTrial {
    pub seed: u64,
    pub mu: Vec<C64>,
    pub torsion: C64,
    #[serde(rename = "T")]
    pub t: C64,
    /// `||𝒯| − |τ|| / |τ|`.
    pub rel_dev: f64,
    /// `+1` if `𝒯 ≈ τ`, `−1` if `𝒯 ≈ −τ`, `0` if neither.
    pub sign: i8,
}

/// Summary of [`verify_theorem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub trials: Vec<TheoremTrial>,
    pub max_rel_dev: f64,
    pub passed: bool,
}

/// Per-trial seed: a ChaCha stream indexed by the trial.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    rng.gen()
}

/// Compare `𝒯` and `τ` over `trials` random gauges and fractional
/// eigenvalue choices, in parallel.
pub fn verify_theorem(link: &Link, trials: usize, seed: u64) -> Result<TheoremReport> {
    let n_comp = closure_components(&link.word).len();
    let results: Vec<Result<TheoremTrial>> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let s = trial_seed(seed, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let g = random_sl2(&mut rng);
            let colors = gauge_transform(&link.colors, &g);
            let base = Link { colors, mu: None, ..link.clone() };
            let defaults = prepare(&base)?.mus;
            let mu: Vec<C64> = defaults
                .iter()
                .take(n_comp.max(defaults.len()))
                .map(|&m| {
                    let m = if rng.gen() { m } else { -m };
                    if rng.gen() {
                        m
                    } else {
                        ONE / m
                    }
                })
                .collect();
            let mut opts = link.options;
            opts.seed = s;
            let l = base.with_mu(mu.clone()).with_options(opts);
            let r = evaluate(&l, Selection::All)?;
            let (tau, t) = (r.torsion.expect("selected"), r.t.expect("selected"));
            let rel_dev = (t.norm() - tau.norm()).abs() / tau.norm();
            let scale = tau.norm().max(1e-300);
            let sign = if (t - tau).norm() <= THEOREM_TOL * scale {
                1
            } else if (t + tau).norm() <= THEOREM_TOL * scale {
                -1
            } else {
                0
            };
            Ok(TheoremTrial { seed: s, mu, torsion: tau, t, rel_dev, sign })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_rel_dev = trials.iter().map(|t| t.rel_dev).fold(0.0, f64::max);
    let passed = trials.iter().all(|t| t.rel_dev < THEOREM_TOL && t.sign != 0);
    Ok(TheoremReport { trials, max_rel_dev, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{det, r};
    use crate::uqi::{intertwiners, tests::arb_ext};
    use proptest::prelude::*;
    use rand::Rng;

    fn w(n: usize, l: &[i32]) -> BraidWord {
        BraidWord::new(n, l.to_vec()).unwrap()
    }

    fn diag_x(t: f64, mu: f64) -> ExtChar {
        ExtChar::new(StarChar::diagonal(r(t)), r(mu), 1e-12).unwrap()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    /// A generic element of `End_U(⊗ V(xⱼ))`.
    fn random_endo(xs: &[ExtChar], rng: &mut ChaCha8Rng, coproduct: Coproduct, dual: bool) -> Matrix {
        let reps: Vec<Rep> = xs
            .iter()
            .map(|x| {
                let s = simple_module(x).unwrap();
                if dual {
                    dual_module(&s).unwrap()
                } else {
                    s
                }
            })
            .collect();
        let v = tensor_rep(&reps, coproduct).unwrap();
        let (basis, _) = intertwiners(&v, &v, 1e-9).unwrap();
        basis.iter().fold(Matrix::zeros(v.dim(), v.dim()), |acc, b| {
            &acc + &b.scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        })
    }

    #[test]
    fn quantum_dimension_vanishes() {
        let x = diag_x(4.0, 2.0);
        let k_inv = simple_module(&x).unwrap().k_inv().unwrap();
        let p = ptr_right(&Matrix::identity(4), &[2, 2], std::slice::from_ref(&k_inv)).unwrap();
        assert!(p.max_abs() < 1e-15);
        let piv = kron(&k_inv, &dual_module(&simple_module(&x).unwrap()).unwrap().k);
        let p = ptr_right(&Matrix::identity(16), &[4, 4], &[piv]).unwrap();
        assert!(p.max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_shapes() {
        assert!(ptr_right(&Matrix::identity(4), &[2, 3], &[]).is_err());
        assert!(ptr_right(&Matrix::identity(4), &[2, 2], &[Matrix::identity(3)]).is_err());
        assert_eq!(ptr_left(&Matrix::identity(6), &[2, 3], &[Matrix::identity(2)]).unwrap(), Matrix::identity(3).scale(r(2.0)));
    }

    #[test]
    fn dimension_pins() {
        let x = diag_x(4.0, 2.0);
        assert!(rel(mtrace_D(&Matrix::identity(4), &[x]).unwrap(), r(4.0 / 9.0)) < 1e-14);
        assert!(rel(mtrace_C(&Matrix::identity(2), &[x]).unwrap(), r(2.0 / 3.0)) < 1e-14);
        assert!(rel(mtrace_Cbar(&Matrix::identity(2), &[x]).unwrap(), r(2.0 / 3.0)) < 1e-14);
        assert!(mtrace_D(&Matrix::identity(16), &[x, x]).unwrap().norm() < 1e-14);
        let y = ExtChar { mu: -x.mu, ..x };
        assert!(rel(mtrace_D_mixed(&Matrix::identity(4), &[(x, y)]).unwrap(), r(-4.0 / 9.0)) < 1e-14);
    }

    #[test]
    fn trace_tuple_dimensions() {
        let x = diag_x(4.0, 2.0);
        let t = mtrace_via_trace_tuple(&Matrix::identity(2), &[x]).unwrap();
        assert!(rel(t, r(2.0 / 3.0)) < 1e-10, "{t}");
        let tb = mtrace_via_trace_tuple_bar(&Matrix::identity(2), &[x]).unwrap();
        assert!(rel(tb, r(2.0 / 3.0)) < 1e-10, "{tb}");
        // the other fractional eigenvalue flips the sign on the dual side
        let y = ExtChar { mu: -x.mu, ..x };
        let tm = mtrace_via_trace_tuple_bar(&Matrix::identity(2), &[y]).unwrap();
        assert!(rel(tm, r(-2.0 / 3.0)) < 1e-10, "{tm}");
    }

    #[test]
    fn non_equivariant_map_is_rejected() {
        let x = diag_x(4.0, 2.0);
        let mut g = Matrix::identity(2);
        g[(0, 1)] = ONE;
        assert!(matches!(mtrace_C(&g, &[x]), Err(Error::TraceNotScalar { .. })));
    }

    #[test]
    fn exterior_oracle_examples() {
        assert!((str_exterior_oracle(&Matrix::zeros(2, 2)).unwrap() - ONE).norm() < 1e-15);
        assert!(str_exterior_oracle(&Matrix::identity(2)).unwrap().norm() < 1e-15);
        assert_eq!(str_exterior_oracle(&Matrix::zeros(13, 13)).unwrap_err(), Error::TooLarge(13));
        assert!((str_exterior_oracle(&Matrix::zeros(0, 0)).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn phase_value_classes() {
        let p = PhaseValue::new(c(0.0, -2.0));
        assert_eq!(p.phase_class, 3);
        assert!(p.phase.abs() < 1e-15 && (p.modulus - 2.0).abs() < 1e-15);
        let q = PhaseValue::new(c(1.0, 1.0));
        assert_eq!(q.phase_class, 0);
        assert!((q.phase - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(PhaseValue::new(c(-3.0, 0.0)).phase_class, 2);
    }

    #[test]
    fn unknot_values() {
        let link = Link::new(w(1, &[]), vec![SL2Elem::diag(r(4.0))]);
        let rep = evaluate(&link, Selection::All).unwrap();
        assert!(rel(rep.t.unwrap(), r(4.0 / 9.0)) < 1e-12);
        assert!(rel(rep.torsion.unwrap(), r(-4.0 / 9.0)) < 1e-12);
        assert!(rel(rep.diagnostics.mu[0], r(2.0)) < 1e-15);
    }

    #[test]
    fn trefoil_diagonal() {
        let link = Link::new(w(2, &[1, 1, 1]), vec![SL2Elem::diag(r(4.0)); 2]);
        let rep = evaluate(&link, Selection::All).unwrap();
        let tau = rep.torsion.unwrap();
        assert!(rel(tau, r(-4225.0 / 900.0)) < 1e-12, "{tau}");
        let t = rep.t.unwrap();
        assert!(rel(t, -tau) < 1e-9 || rel(t, tau) < 1e-9, "{t} vs {tau}");
        let k = rep.k.unwrap();
        assert!(rel(k.value * rep.f.unwrap().value * rep.f_bar.unwrap().value, t) < 1e-9);
        assert!(rel(burau_side(&link).unwrap(), t) < 1e-9 || rel(burau_side(&link).unwrap(), -t) < 1e-9);
    }

    #[test]
    fn pipeline_errors() {
        let parabolic = SL2Elem::new(Matrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]])).unwrap();
        let link = Link::new(w(1, &[]), vec![parabolic]);
        assert_eq!(evaluate(&link, Selection::T).unwrap_err(), Error::SingularMeridian { index: 0 });
        let g = random_sl2(&mut ChaCha8Rng::seed_from_u64(1));
        let link = Link::new(w(2, &[1]), vec![SL2Elem::diag(r(4.0)), g]);
        assert!(matches!(evaluate(&link, Selection::Torsion), Err(Error::NotClosure { .. })));
        let link = Link::new(w(2, &[1, 1]), vec![SL2Elem::diag(r(4.0)), SL2Elem::diag(r(0.25))]);
        let off = Options { stabilize: Policy::Off, ..Options::default() };
        assert_eq!(evaluate(&link.clone().with_options(off), Selection::T).unwrap_err(), Error::SingularTotalHolonomy);
        let rep = evaluate(&link, Selection::All).unwrap();
        assert_eq!(rep.diagnostics.stabilizations, 1);
        let bad_mu = Link::new(w(1, &[]), vec![SL2Elem::diag(r(4.0))]).with_mu(vec![r(3.0)]);
        assert!(matches!(evaluate(&bad_mu, Selection::T).unwrap_err().root(), Error::BadFractionalEigenvalue { .. }));
    }

    #[test]
    fn inadmissible_colors_need_a_gauge() {
        let g = SL2Elem::new(Matrix::from_real_rows(&[[0.0, 1.0], [-1.0, 3.0]])).unwrap();
        let link = Link::new(w(1, &[]), vec![g]);
        let off = Options { gauge: Policy::Off, ..Options::default() };
        assert!(matches!(evaluate(&link.clone().with_options(off), Selection::T), Err(Error::InadmissibleTuple { .. })));
        let rep = evaluate(&link, Selection::T).unwrap();
        assert!(rep.diagnostics.gauge.is_some());
        let w3 = C64::new(3.0, 0.0);
        let mu = meridian_default_mu(&SL2Elem::diag((w3 + (w3 * w3 - 4.0).sqrt()) / 2.0));
        let om = mu - ONE / mu;
        assert!(rel(rep.t.unwrap(), ONE / (om * om)) < 1e-10);
    }

    #[test]
    fn closure_solver_trefoil() {
        let word = w(2, &[1, 1, 1]);
        let colors = solve_closure_colors(&word, &[c(1.7, 0.3)], true, 5).unwrap();
        assert!(closure_residual(&word, &colors).unwrap() < 1e-10);
        assert!(colors[0].matrix().commutator(colors[1].matrix()).max_abs() > 1e-3);
        let rep = evaluate(&Link::new(word, colors), Selection::All).unwrap();
        let (t, tau) = (rep.t.unwrap(), rep.torsion.unwrap());
        assert!((t.norm() - tau.norm()).abs() < 1e-7 * tau.norm(), "{t} vs {tau}");
    }

    #[test]
    fn theorem_report_is_reproducible() {
        let link = Link::new(w(2, &[1, 1]), vec![SL2Elem::diag(r(3.0)), SL2Elem::diag(c(0.5, 0.5))]);
        let a = verify_theorem(&link, 4, 11).unwrap();
        let b = verify_theorem(&link, 4, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a:?}");
    }

    #[test]
    fn sphericity_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x1 = ExtChar::with_default_mu(StarChar::new(c(1.3, 0.4), c(0.2, -0.7), c(0.5, 0.1)).unwrap());
        let x2 = ExtChar::with_default_mu(StarChar::new(c(0.6, -0.9), c(-0.3, 0.2), c(0.8, 0.4)).unwrap());
        let f = random_endo(&[x1, x2], &mut rng, Coproduct::Delta, false);
        let k1 = simple_module(&x1).unwrap();
        let k2 = simple_module(&x2).unwrap();
        let right = ptr_right(&f, &[2, 2], &[k2.k_inv().unwrap()]).unwrap();
        let left = ptr_left(&f, &[2, 2], std::slice::from_ref(&k1.k)).unwrap();
        let a = scalar_residue(&right, f.norm()).unwrap() / x1.omega();
        let b = scalar_residue(&left, f.norm()).unwrap() / x2.omega();
        assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "{a} vs {b}");
    }

    #[test]
    fn mirror_image_relation() {
        // 𝐭(ℱ̄) on the mirror braid matches 𝐭(ℱ) up to a power of i
        let word = w(2, &[1, 1, 1]);
        let colors = solve_closure_colors(&word, &[c(1.4, -0.2)], true, 2).unwrap();
        let link = Link::new(word.clone(), colors.clone());
        let f = evaluate(&link, Selection::F).unwrap().f.unwrap();
        let mirrored = Link::new(word.mirror(), colors);
        let fb = evaluate(&mirrored, Selection::F).unwrap().f_bar.unwrap();
        assert!((f.modulus - fb.modulus).abs() < 1e-7 * f.modulus, "{f:?} vs {fb:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trace_tuple_agrees_with_partial_trace(x1 in arb_ext(), x2 in arb_ext(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_endo(&[x1, x2], &mut rng, Coproduct::Delta, false);
            let a = mtrace_C(&f, &[x1, x2]).unwrap();
            let b = mtrace_via_trace_tuple(&f, &[x1, x2]).unwrap();
            prop_assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{} vs {}", a, b);
            let g = random_endo(&[x1, x2], &mut rng, Coproduct::Delta, false);
            let fg = mtrace_C(&(&f * &g), &[x1, x2]).unwrap();
            let gf = mtrace_C(&(&g * &f), &[x1, x2]).unwrap();
            prop_assert!((fg - gf).norm() < 1e-9 * (1.0 + fg.norm()));
        }

        #[test]
        fn mirror_trace_tuple_agrees(x1 in arb_ext(), x2 in arb_ext(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_endo(&[x1, x2], &mut rng, Coproduct::DeltaOp, true);
            let a = mtrace_Cbar(&f, &[x1, x2]).unwrap();
            let b = mtrace_via_trace_tuple_bar(&f, &[x1, x2]).unwrap();
            prop_assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{} vs {}", a, b);
        }

        #[test]
        fn partial_trace_compatibility(x1 in arb_ext(), x2 in arb_ext(), x3 in arb_ext(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs = [x1, x2, x3];
            let f = random_endo(&xs, &mut rng, Coproduct::Delta, false);
            let piv = simple_module(&x3).unwrap().k_inv().unwrap();
            let reduced = ptr_right(&f, &[2, 2, 2], &[piv]).unwrap();
            let a = mtrace_C(&f, &xs).unwrap();
            let b = mtrace_C(&reduced, &xs[..2]).unwrap();
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }

        #[test]
        fn doubled_trace_factorizes(x1 in arb_ext(), x2 in arb_ext(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_endo(&[x1, x2], &mut rng, Coproduct::Delta, false);
            let g = random_endo(&[x1, x2], &mut rng, Coproduct::DeltaOp, true);
            let q = crate::uqi::interleave_permutation(2);
            let fg = &(&q * &kron(&f, &g)) * &q.transpose();
            let d = mtrace_D(&fg, &[x1, x2]).unwrap();
            let prod = mtrace_C(&f, &[x1, x2]).unwrap() * mtrace_Cbar(&g, &[x1, x2]).unwrap();
            prop_assert!((d - prod).norm() < 1e-8 * (1.0 + d.norm()));
        }

        #[test]
        fn exterior_supertrace_is_determinant(n in 0usize..7, seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Matrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let lhs = str_exterior_oracle(&a).unwrap();
            let rhs = det(&(&Matrix::identity(n) - &a)).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
