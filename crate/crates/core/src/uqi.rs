//! Matrix realizations of the quantum group `U = U_q(sl₂)` at `q = i`.
//!
//! A representation is given by the images of the generators `K, E, F`,
//! subject to
//!
//! ```text
//! KE = −EK,   KF = −FK,   EF − FE = 2i (K − K⁻¹).
//! ```
//!
//! The Casimir is normalized as `Ω = K − K⁻¹ + iEF`, which acts on the simple
//! module `V(χ, μ)` by `ω = μ − μ⁻¹`. The coproduct is
//! `ΔK = K ⊗ K`, `ΔE = 1 ⊗ E + E ⊗ K`, `ΔF = K⁻¹ ⊗ F + F ⊗ 1` and the
//! antipode is `S(K) = K⁻¹`, `S(E) = −EK⁻¹`, `S(F) = −KF`.
//!
//! The second Clifford generator uses `F̃ = −iKF`. With this sign the
//! conjugation action of a holonomy braiding on the `β` operators is exactly
//! the nice-basis Burau block (see [`crate::burau::nice_generator`]).

use crate::error::{Error, Result};
use crate::holonomy::{ExtChar, DEGENERACY_TOL};
use crate::numerics::{kron, kron_all, nullspace, principal_sqrt, Matrix, Nullspace, C64, I, ONE, ZERO};

/// Tolerance for treating a character coordinate as zero when choosing the
/// shape of a simple module.
const SHAPE_TOL: f64 = 1e-12;

/// A finite-dimensional representation, stored as the images of `K, E, F`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rep {
    pub k: Matrix,
    pub e: Matrix,
    pub f: Matrix,
}

/// One of the three algebra generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gen {
    K,
    E,
    F,
}

impl Gen {
    pub const ALL: [Gen; 3] = [Gen::K, Gen::E, Gen::F];
}

/// Which coproduct builds a tensor product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coproduct {
    Delta,
    DeltaOp,
}

impl Rep {
    pub fn new(k: Matrix, e: Matrix, f: Matrix) -> Result<Self> {
        let d = k.rows();
        for m in [&k, &e, &f] {
            if m.rows() != d || m.cols() != d {
                return Err(Error::Dimension(format!("generator images must all be {d}x{d}")));
            }
        }
        Ok(Rep { k, e, f })
    }

    pub fn dim(&self) -> usize {
        self.k.rows()
    }

    pub fn image(&self, g: Gen) -> &Matrix {
        match g {
            Gen::K => &self.k,
            Gen::E => &self.e,
            Gen::F => &self.f,
        }
    }

    pub fn k_inv(&self) -> Result<Matrix> {
        self.k.inverse()
    }

    /// Largest entry of the three defining relations.
    pub fn relation_residual(&self) -> Result<f64> {
        let ki = self.k_inv()?;
        let r1 = self.k.anticommutator(&self.e).max_abs();
        let r2 = self.k.anticommutator(&self.f).max_abs();
        let r3 = (&self.e.commutator(&self.f) - &(&self.k - &ki).scale(I * 2.0)).max_abs();
        Ok(r1.max(r2).max(r3))
    }

    /// `Ω = K − K⁻¹ + iEF`.
    pub fn casimir(&self) -> Result<Matrix> {
        Ok(&(&self.k - &self.k_inv()?) + &(&self.e * &self.f).scale(I))
    }

    /// `F̃ = −iKF`.
    pub fn f_tilde(&self) -> Matrix {
        (&self.k * &self.f).scale(-I)
    }
}

/// If `m` is a multiple of the identity within `tol` (relative to its size),
/// return the multiple.
pub fn scalar_value(m: &Matrix, tol: f64) -> Option<C64> {
    if !m.is_square() || m.rows() == 0 {
        return None;
    }
    let lam = m.trace() / m.rows() as f64;
    let off = (m - &Matrix::identity(m.rows()).scale(lam)).max_abs();
    (off <= tol * (1.0 + m.max_abs())).then_some(lam)
}

fn choose_sqrt_kappa(x: &ExtChar) -> C64 {
    let kappa = x.chi.kappa;
    // With φ = 0 one of μ, −1/μ squares to κ; picking it makes π(F) strictly
    // upper triangular.
    if x.chi.phi.norm() <= SHAPE_TOL {
        let mu = x.mu;
        if (mu * mu - kappa).norm() <= 1e-9 * (1.0 + kappa.norm()) {
            return mu;
        }
        return -ONE / mu;
    }
    principal_sqrt(kappa)
}

/// The two-dimensional simple module `V(χ, μ)`.
///
/// Basis `|0⟩, |1⟩` with `π(K) = diag(s, −s)`, `s² = κ`. For `ε ≠ 0` the
/// module is `E`-cyclic with `π(E) = [[0, ε], [1, 0]]`; for `ε = 0 ≠ φ` the
/// roles of `E` and `F` are exchanged; for `ε = φ = 0`, `π(E)` is the
/// elementary lowering matrix and `π(F) = [[0, −2iω], [0, 0]]`.
pub fn simple_module(x: &ExtChar) -> Result<Rep> {
    let chi = &x.chi;
    if chi.kappa.norm() <= DEGENERACY_TOL || x.mu.norm() <= DEGENERACY_TOL {
        return Err(Error::DegenerateCharacter);
    }
    let w = x.omega();
    if w.norm() <= DEGENERACY_TOL {
        return Err(Error::NoSimpleModule);
    }
    let s = choose_sqrt_kappa(x);
    let k = Matrix::diag(&[s, -s]);
    let (eps, phi, kappa) = (chi.epsilon, chi.phi, chi.kappa);
    let d = s - ONE / s;
    let (e, f) = if eps.norm() > SHAPE_TOL {
        (
            Matrix::from_rows(&[[ZERO, eps], [ONE, ZERO]]),
            Matrix::from_rows(&[[ZERO, -I * (w + d)], [-I * (w - d) / eps, ZERO]]),
        )
    } else if phi.norm() > SHAPE_TOL {
        (
            Matrix::from_rows(&[[ZERO, -I * (w - d)], [-I * kappa * (w + d) / phi, ZERO]]),
            Matrix::from_rows(&[[ZERO, phi / kappa], [ONE, ZERO]]),
        )
    } else {
        (Matrix::from_rows(&[[ZERO, ZERO], [ONE, ZERO]]), Matrix::from_rows(&[[ZERO, -I * 2.0 * w], [ZERO, ZERO]]))
    };
    Ok(Rep { k, e, f })
}

/// The dual module: `x ↦ π(S(x))ᵀ`.
pub fn dual_module(r: &Rep) -> Result<Rep> {
    let ki = r.k_inv()?;
    Ok(Rep { k: ki.transpose(), e: (-&(&r.e * &ki)).transpose(), f: (-&(&r.k * &r.f)).transpose() })
}

/// Tensor product of several representations through the iterated
/// coproduct (`Δ`) or the opposite coproduct (`Δᵒᵖ`).
pub fn tensor_rep(reps: &[Rep], variant: Coproduct) -> Result<Rep> {
    if reps.is_empty() {
        let one = Matrix::identity(1);
        return Ok(Rep { k: one.clone(), e: Matrix::zeros(1, 1), f: Matrix::zeros(1, 1) });
    }
    let ids: Vec<Matrix> = reps.iter().map(|r| Matrix::identity(r.dim())).collect();
    let kis = reps.iter().map(Rep::k_inv).collect::<Result<Vec<_>>>()?;
    let k = kron_all(reps.iter().map(|r| &r.k));
    let total = k.rows();
    let mut e = Matrix::zeros(total, total);
    let mut f = Matrix::zeros(total, total);
    for j in 0..reps.len() {
        let (e_j, f_j): (Vec<&Matrix>, Vec<&Matrix>) = (0..reps.len())
            .map(|l| {
                use std::cmp::Ordering::*;
                match (variant, l.cmp(&j)) {
                    (_, Equal) => (&reps[l].e, &reps[l].f),
                    (Coproduct::Delta, Less) => (&ids[l], &kis[l]),
                    (Coproduct::Delta, Greater) => (&reps[l].k, &ids[l]),
                    (Coproduct::DeltaOp, Less) => (&reps[l].k, &ids[l]),
                    (Coproduct::DeltaOp, Greater) => (&ids[l], &kis[l]),
                }
            })
            .unzip();
        e = &e + &kron_all(e_j);
        f = &f + &kron_all(f_j);
    }
    Ok(Rep { k, e, f })
}

/// The projective cover `P₀` of the trivial module, in the basis
/// `x, y₁, y₂, z` with `E x = y₁`, `F x = −i y₂`, `E y₂ = z`, `F y₁ = −i z`.
pub fn p0_module() -> Rep {
    let k = Matrix::from_real_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]);
    let mut e = Matrix::zeros(4, 4);
    e[(1, 0)] = ONE;
    e[(3, 2)] = ONE;
    let mut f = Matrix::zeros(4, 4);
    f[(2, 0)] = -I;
    f[(3, 1)] = -I;
    Rep { k, e, f }
}

/// The one-dimensional parity module `K ↦ −1`, `E, F ↦ 0`.
pub fn parity_module() -> Rep {
    Rep { k: Matrix::diag(&[-ONE]), e: Matrix::zeros(1, 1), f: Matrix::zeros(1, 1) }
}

/// `P₁ = Π ⊗ P₀`.
pub fn p1_module() -> Rep {
    tensor_rep(&[parity_module(), p0_module()], Coproduct::Delta).expect("P0 and the parity module are invertible")
}

/// Stacked linear system whose null space is `Hom(a, b)`: unknown `X` of
/// shape `dim b × dim a`, vectorized row-major, with `X a(u) = b(u) X`.
pub(crate) fn intertwiner_system(a: &Rep, b: &Rep) -> Result<Matrix> {
    let (da, db) = (a.dim(), b.dim());
    let (ia, ib) = (Matrix::identity(da), Matrix::identity(db));
    let blocks: Vec<Matrix> = Gen::ALL
        .iter()
        .map(|&g| &kron(&ib, &a.image(g).transpose()) - &kron(b.image(g), &ia))
        .collect();
    Matrix::vstack(&blocks)
}

/// The space of module maps `a → b`, as matrices of shape `dim b × dim a`.
pub fn intertwiners(a: &Rep, b: &Rep, tol: f64) -> Result<(Vec<Matrix>, Nullspace)> {
    let ns = nullspace(&intertwiner_system(a, b)?, tol);
    let maps = ns
        .basis
        .iter()
        .map(|v| Matrix::from_vec(b.dim(), a.dim(), v.entries().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok((maps, ns))
}

/// Largest entry of `f a(u) − b(u) f` over the generators.
pub fn intertwining_residual(f: &Matrix, a: &Rep, b: &Rep) -> f64 {
    Gen::ALL
        .iter()
        .map(|&g| (&(f * a.image(g)) - &(b.image(g) * f)).max_abs())
        .fold(0.0, f64::max)
}

/// Isomorphism `P₀ → V(χ, μ) ⊗ V(χ, μ)*`, as a 4×4 matrix whose columns are
/// the images of `x, y₁, y₂, z` in the basis `|j⟩⟨k|` (index `2j + k`).
///
/// For `ε ≠ 0` the columns are given in closed form, with `α = π(K)₀₀`:
///
/// ```text
/// f(x)  = |0⟩⟨0| − |1⟩⟨1|
/// f(y₁) = (2/α) (ε |0⟩⟨1| + |1⟩⟨0|)
/// f(y₂) = −2 ((α − α⁻¹ + ω) |0⟩⟨1| + ε⁻¹ (α − α⁻¹ − ω) |1⟩⟨0|)
/// f(z)  = (4ω/α) (|0⟩⟨0| + |1⟩⟨1|)
/// ```
///
/// Otherwise the columns are generated from `f(x)` by the action of `P₀`.
/// Either way the intertwining property is checked before returning.
pub fn p0_iso(x: &ExtChar) -> Result<Matrix> {
    let v = simple_module(x)?;
    let vv = tensor_rep(&[v.clone(), dual_module(&v)?], Coproduct::Delta)?;
    let ket = |j: usize, k: usize| {
        let mut m = Matrix::zeros(4, 1);
        m[(2 * j + k, 0)] = ONE;
        m
    };
    let fx = &ket(0, 0) - &ket(1, 1);
    let cols = if x.chi.epsilon.norm() > SHAPE_TOL {
        let (alpha, eps, w) = (v.k[(0, 0)], x.chi.epsilon, x.omega());
        let d = alpha - ONE / alpha;
        let fy1 = (&ket(0, 1).scale(eps) + &ket(1, 0)).scale(2.0 / alpha);
        let fy2 = (&ket(0, 1).scale(d + w) + &ket(1, 0).scale((d - w) / eps)).scale(-ONE * 2.0);
        let fz = (&ket(0, 0) + &ket(1, 1)).scale(4.0 * w / alpha);
        [fx, fy1, fy2, fz]
    } else {
        let fy1 = &vv.e * &fx;
        let fy2 = (&vv.f * &fx).scale(I);
        let fz = &vv.e * &fy2;
        [fx, fy1, fy2, fz]
    };
    let mut f = Matrix::zeros(4, 4);
    for (j, col) in cols.iter().enumerate() {
        f.set_block(0, j, col);
    }
    let residual = intertwining_residual(&f, &p0_module(), &vv);
    if residual > 1e-8 * (1.0 + f.max_abs() * vv.e.max_abs().max(vv.f.max_abs())) {
        return Err(Error::LiftFailed { residual });
    }
    if f.det()?.norm() <= DEGENERACY_TOL * f.max_abs().powi(4).max(1.0) {
        return Err(Error::NoSimpleModule.context("P0 isomorphism is singular"));
    }
    Ok(f)
}

/// The operators `α_j^ν` (`j = 1..n`) and `β_j^ν = α_j^ν − α_{j+1}^ν`
/// (`j = 1..n−1`) on a tensor product of `n` two-dimensional modules.
/// Index `[0]` is `ν = 1` (built from `E`), index `[1]` is `ν = 2` (from `F̃`).
#[derive(Clone, Debug)]
pub struct CliffordFamily {
    pub n: usize,
    pub alpha: Vec<[Matrix; 2]>,
    pub beta: Vec<[Matrix; 2]>,
}

impl CliffordFamily {
    fn from_alpha(n: usize, alpha: Vec<[Matrix; 2]>) -> Self {
        let beta = (0..n.saturating_sub(1))
            .map(|j| [&alpha[j][0] - &alpha[j + 1][0], &alpha[j][1] - &alpha[j + 1][1]])
            .collect();
        CliffordFamily { n, alpha, beta }
    }

    /// The `β` operators in the order `β_1², β_1¹, β_2², β_2¹, …`, matching the
    /// nice Burau basis.
    pub fn beta_basis(&self) -> Vec<&Matrix> {
        self.beta.iter().flat_map(|b| [&b[1], &b[0]]).collect()
    }
}

/// Build `α` operators on `⊗ reps`: the `j`th factor carries `X_j Ω_j⁻¹` and
/// the factors before it (or after it, when `mirrored`) carry `K`.
fn alpha_family(reps: &[Rep], omegas: &[C64], mirrored: bool) -> Vec<[Matrix; 2]> {
    let n = reps.len();
    (0..n)
        .map(|j| {
            let gens = [reps[j].e.clone(), reps[j].f_tilde()];
            gens.map(|x| {
                let factors: Vec<Matrix> = (0..n)
                    .map(|l| {
                        if l == j {
                            x.scale(ONE / omegas[j])
                        } else if (l < j) != mirrored {
                            reps[l].k.clone()
                        } else {
                            Matrix::identity(reps[l].dim())
                        }
                    })
                    .collect();
                kron_all(&factors)
            })
        })
        .collect()
}

fn nonsingular_omegas(xs: &[ExtChar]) -> Result<Vec<C64>> {
    xs.iter()
        .enumerate()
        .map(|(index, x)| {
            let w = x.omega();
            if w.norm() <= DEGENERACY_TOL {
                Err(Error::SingularMeridian { index })
            } else {
                Ok(w)
            }
        })
        .collect()
}

/// `α_j¹ = K₁⋯K_{j−1} E_j Ω_j⁻¹`, `α_j² = K₁⋯K_{j−1} F̃_j Ω_j⁻¹` on
/// `⊗_j V(χ_j, μ_j)`.
pub fn clifford_family(xs: &[ExtChar]) -> Result<CliffordFamily> {
    let omegas = nonsingular_omegas(xs)?;
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    Ok(CliffordFamily::from_alpha(xs.len(), alpha_family(&reps, &omegas, false)))
}

/// `ᾱ_j^ν = X_j Ω_j⁻¹ K_{j+1}⋯K_n` on `⊗_j V(χ_j, μ_j)*`.
pub fn mirrored_clifford_family(xs: &[ExtChar]) -> Result<CliffordFamily> {
    let omegas = nonsingular_omegas(xs)?;
    let reps = xs.iter().map(|x| simple_module(x).and_then(|v| dual_module(&v))).collect::<Result<Vec<_>>>()?;
    Ok(CliffordFamily::from_alpha(xs.len(), alpha_family(&reps, &omegas, true)))
}

/// Permutation taking the split ordering `(V₁ ⊗ ⋯ ⊗ Vₙ) ⊗ (V₁* ⊗ ⋯ ⊗ Vₙ*)`
/// to the interleaved ordering `(V₁ ⊠ V₁*) ⊗ ⋯ ⊗ (Vₙ ⊠ Vₙ*)`, all factors two
/// dimensional.
pub fn interleave_permutation(n: usize) -> Matrix {
    let dim = 1usize << (2 * n);
    let mut p = Matrix::zeros(dim, dim);
    for split in 0..dim {
        let mut inter = 0usize;
        for j in 0..n {
            let a = (split >> (2 * n - 1 - j)) & 1;
            let b = (split >> (n - 1 - j)) & 1;
            inter |= ((a << 1) | b) << (2 * (n - 1 - j));
        }
        p[(inter, split)] = ONE;
    }
    p
}

/// Move an operator on the split ordering to the interleaved ordering.
pub fn to_interleaved(m: &Matrix, n: usize) -> Matrix {
    let p = interleave_permutation(n);
    &(&p * m) * &p.transpose()
}

/// The doubled family on `⊗_j V_j ⊠ V_j*` (interleaved ordering):
/// `γ_j^ν = α_j^ν ⊠ 1 + ΔK ⊠ ᾱ_j^ν` stored in `alpha`, and
/// `θ_j^ν = γ_j^ν − γ_{j+1}^ν` stored in `beta`.
pub fn doubled_theta(xs: &[ExtChar]) -> Result<CliffordFamily> {
    let n = xs.len();
    let fwd = clifford_family(xs)?;
    let bar = mirrored_clifford_family(xs)?;
    let reps = xs.iter().map(simple_module).collect::<Result<Vec<_>>>()?;
    let delta_k = kron_all(reps.iter().map(|r| &r.k));
    let id = Matrix::identity(1 << n);
    let gamma = (0..n)
        .map(|j| {
            [0, 1].map(|nu| to_interleaved(&(&kron(&fwd.alpha[j][nu], &id) + &kron(&delta_k, &bar.alpha[j][nu])), n))
        })
        .collect();
    Ok(CliffordFamily::from_alpha(n, gamma))
}

/// `K₁²⋯K_{j−1}²` evaluated on characters, times the given factor.
fn kappa_prefix(xs: &[ExtChar], j: usize) -> C64 {
    xs[..j].iter().map(|x| x.chi.kappa).product()
}

/// Expected value of `{α_j¹, α_j²}` on `⊗ V(χ_l, μ_l)`:
/// `2 K₁²⋯K_{j−1}² (1 − K_j²) Ω_j⁻²` as an operator (not a scalar, since
/// `K_j²` acts by `κ_j` but the prefix is evaluated on characters).
pub fn mixed_anticommutator_value(xs: &[ExtChar], j: usize) -> C64 {
    let w = xs[j].omega();
    ONE * 2.0 * kappa_prefix(xs, j) * (ONE - xs[j].chi.kappa) / (w * w)
}

/// Expected scalar values of `{α_j¹, α_j¹}` and `{α_j², α_j²}`:
/// `2 K₁²⋯K_{j−1}² E_j² Ω_j⁻²` and `2 K₁²⋯K_{j−1}² K_j² F_j² Ω_j⁻²`.
pub fn square_anticommutator_values(xs: &[ExtChar], j: usize) -> (C64, C64) {
    let w = xs[j].omega();
    let pre = ONE * 2.0 * kappa_prefix(xs, j) / (w * w);
    (pre * xs[j].chi.epsilon, pre * xs[j].chi.phi)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::holonomy::{StarChar, biquandle_b};
    use crate::numerics::{c, r};
    use proptest::prelude::*;

    fn ext(k: C64, e: C64, f: C64) -> ExtChar {
        ExtChar::with_default_mu(StarChar { kappa: k, epsilon: e, phi: f })
    }

    pub(crate) fn arb_ext() -> impl Strategy<Value = ExtChar> {
        proptest::collection::vec(-1.0f64..1.0, 6).prop_filter_map("singular", |v| {
            let chi = StarChar { kappa: c(1.3 + 0.6 * v[0], 0.6 * v[1]), epsilon: c(v[2], v[3]), phi: c(v[4], v[5]) };
            let x = ExtChar::with_default_mu(chi);
            (x.omega().norm() > 0.05).then_some(x)
        })
    }

    #[test]
    fn simple_module_examples() {
        let mu = c(1.7, 0.4);
        let chi = StarChar { kappa: mu * mu, epsilon: ONE, phi: ZERO };
        let v = simple_module(&ExtChar::new(chi, mu, 1e-9).unwrap()).unwrap();
        let w = mu - ONE / mu;
        assert!(v.f.dist(&Matrix::from_rows(&[[ZERO, -I * 2.0 * w], [ZERO, ZERO]])) < 1e-13);

        let x = ExtChar::new(StarChar::diagonal(r(4.0)), r(2.0), 1e-12).unwrap();
        let v = simple_module(&x).unwrap();
        assert!(v.k.dist(&Matrix::diag(&[r(2.0), r(-2.0)])) < 1e-15);
        assert!((scalar_value(&v.casimir().unwrap(), 1e-14).unwrap() - 1.5).norm() < 1e-14);
    }

    #[test]
    fn singular_characters_have_no_simple_module() {
        let x = ExtChar { chi: StarChar::identity(), mu: ONE };
        assert_eq!(simple_module(&x).unwrap_err(), Error::NoSimpleModule);
    }

    #[test]
    fn projective_modules() {
        let p0 = p0_module();
        assert_eq!(p0.k, Matrix::from_real_rows(&[[1.0, 0., 0., 0.], [0., -1., 0., 0.], [0., 0., -1., 0.], [0., 0., 0., 1.]]));
        assert!(p0.relation_residual().unwrap() < 1e-15);
        let pi = parity_module();
        assert_eq!(pi.e.max_abs(), 0.0);
        assert_eq!(pi.f.max_abs(), 0.0);
        assert!(pi.relation_residual().unwrap() < 1e-15);
        let p1 = p1_module();
        assert!(p1.k.dist(&p0.k.scale(-ONE)) < 1e-15);
        assert!(p1.relation_residual().unwrap() < 1e-15);
        // Ω is not diagonalizable on P₀: it squares to zero but is nonzero
        let om = p0.casimir().unwrap();
        assert!(om.max_abs() > 0.5);
        assert!((&om * &om).max_abs() < 1e-15);
    }

    #[test]
    fn p0_iso_closed_form_matches_generated_columns() {
        let x = ext(c(1.4, 0.3), c(0.7, -0.2), c(-0.3, 0.5));
        let f = p0_iso(&x).unwrap();
        let v = simple_module(&x).unwrap();
        let vv = tensor_rep(&[v.clone(), dual_module(&v).unwrap()], Coproduct::Delta).unwrap();
        let fx = f.block(0, 0, 4, 1);
        assert!(f.block(0, 2, 4, 1).dist(&(&vv.f * &fx).scale(I)) < 1e-12);
        assert!(f.block(0, 3, 4, 1).dist(&(&vv.e * &f.block(0, 2, 4, 1))) < 1e-12);
        // f(z) is proportional to |0⟩⟨0| + |1⟩⟨1|
        let fz = f.block(0, 3, 4, 1);
        assert!(fz[(1, 0)].norm() < 1e-14 && fz[(2, 0)].norm() < 1e-14);
        assert!((fz[(0, 0)] - fz[(3, 0)]).norm() < 1e-13 && fz[(0, 0)].norm() > 1e-3);
    }

    #[test]
    fn p0_iso_without_epsilon() {
        for x in [ext(r(4.0), ZERO, ZERO), ext(c(2.0, 1.0), ZERO, c(0.4, 0.9))] {
            let f = p0_iso(&x).unwrap();
            let v = simple_module(&x).unwrap();
            let vv = tensor_rep(&[v.clone(), dual_module(&v).unwrap()], Coproduct::Delta).unwrap();
            assert!(intertwining_residual(&f, &p0_module(), &vv) < 1e-12);
        }
    }

    #[test]
    fn mixed_tensor_square_is_p1() {
        let x = ext(c(1.4, 0.3), c(0.7, -0.2), c(-0.3, 0.5));
        let minus = ExtChar { chi: x.chi, mu: -x.mu };
        let v = simple_module(&x).unwrap();
        let w = dual_module(&simple_module(&minus).unwrap()).unwrap();
        let vw = tensor_rep(&[v, w], Coproduct::Delta).unwrap();
        // End(P₁) is spanned by the identity and a nilpotent map, so the
        // homomorphisms form a plane whose generic member is invertible
        let (maps, ns) = intertwiners(&p1_module(), &vw, 1e-10).unwrap();
        assert_eq!(ns.dim(), 2);
        let generic = &maps[0] + &maps[1].scale(c(0.37, -1.3));
        assert!(generic.det().unwrap().norm() > 1e-6);
    }

    #[test]
    fn interleave_permutation_small_cases() {
        assert_eq!(interleave_permutation(1), Matrix::identity(4));
        let p = interleave_permutation(2);
        // split index (a1 a2 b1 b2) = (0 1 1 0) = 6 goes to interleaved (a1 b1 a2 b2) = (0 1 1 0) = 6
        assert_eq!(p[(6, 6)], ONE);
        // split (1 0 0 1) = 9 → interleaved (1 0 0 1) = 9; split (0 1 0 0) = 4 → interleaved (0 0 1 0) = 2
        assert_eq!(p[(9, 9)], ONE);
        assert_eq!(p[(2, 4)], ONE);
        assert!((&p * &p.transpose()).dist(&Matrix::identity(16)) < 1e-15);
    }

    #[test]
    fn tensor_character_is_the_product_character() {
        let xs = [ext(c(1.4, 0.3), c(0.7, -0.2), c(-0.3, 0.5)), ext(c(0.9, -0.4), c(0.2, 0.6), c(0.5, 0.1))];
        let reps: Vec<Rep> = xs.iter().map(|x| simple_module(x).unwrap()).collect();
        let t = tensor_rep(&reps, Coproduct::Delta).unwrap();
        let om = t.casimir().unwrap();
        let sq = scalar_value(&(&om * &om), 1e-10).unwrap();
        let prod = xs[0].chi.mul(&xs[1].chi);
        assert!((sq - prod.casimir_sq()).norm() < 1e-10 * (1.0 + sq.norm()));
        let k2 = scalar_value(&(&t.k * &t.k), 1e-12).unwrap();
        assert!((k2 - prod.kappa).norm() < 1e-12);
    }

    #[test]
    fn double_dual_is_conjugate_by_the_pivot() {
        let v = simple_module(&ext(c(1.4, 0.3), c(0.7, -0.2), c(-0.3, 0.5))).unwrap();
        let vv = dual_module(&dual_module(&v).unwrap()).unwrap();
        let piv = v.k_inv().unwrap();
        let piv_inv = v.k.clone();
        for g in Gen::ALL {
            let conj = &(&piv * v.image(g)) * &piv_inv;
            assert!(conj.dist(vv.image(g)) < 1e-12);
        }
    }

    #[test]
    fn doubled_generators_anticommute_and_separate_v0() {
        let xs = [ext(c(1.4, 0.3), c(0.7, -0.2), c(-0.3, 0.5)), ext(c(0.9, -0.4), c(0.2, 0.6), c(0.5, 0.1))];
        let fam = doubled_theta(&xs).unwrap();
        let gens: Vec<&Matrix> = fam.alpha.iter().flat_map(|a| a.iter()).collect();
        for a in &gens {
            for b in &gens {
                assert!(a.anticommutator(b).max_abs() < 1e-10);
            }
        }
        let z = Matrix::column(&[ONE, ZERO, ZERO, ONE]);
        let v0 = kron(&z, &z);
        for g in &fam.alpha {
            let (u, w) = (&g[0] * &v0, &g[1] * &v0);
            let pair = Matrix::from_fn(16, 2, |i, j| if j == 0 { u[(i, 0)] } else { w[(i, 0)] });
            let sv = pair.singular_values();
            assert!(sv[1] > 1e-6 * sv[0]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn simple_modules_satisfy_relations(x in arb_ext()) {
            let v = simple_module(&x).unwrap();
            prop_assert!(v.relation_residual().unwrap() < 1e-12 * (1.0 + v.f.max_abs() + v.e.max_abs()));
            let om = scalar_value(&v.casimir().unwrap(), 1e-12).unwrap();
            prop_assert!((om - x.omega()).norm() < 1e-12 * (1.0 + om.norm()));
            // central elements act by the character
            let k2 = scalar_value(&(&v.k * &v.k), 1e-12).unwrap();
            let e2 = scalar_value(&(&v.e * &v.e), 1e-12).unwrap();
            let f2 = scalar_value(&(&v.f * &v.f), 1e-10).unwrap();
            prop_assert!((k2 - x.chi.kappa).norm() < 1e-12);
            prop_assert!((e2 - x.chi.epsilon).norm() < 1e-12);
            prop_assert!((f2 - x.chi.phi / x.chi.kappa).norm() < 1e-10);
        }

        #[test]
        fn duals_carry_the_inverse_character(x in arb_ext()) {
            let d = dual_module(&simple_module(&x).unwrap()).unwrap();
            prop_assert!(d.relation_residual().unwrap() < 1e-10);
            let inv = x.chi.inverse();
            let k2 = scalar_value(&(&d.k * &d.k), 1e-12).unwrap();
            let e2 = scalar_value(&(&d.e * &d.e), 1e-12).unwrap();
            let f2 = scalar_value(&(&d.f * &d.f), 1e-10).unwrap();
            prop_assert!((k2 - inv.kappa).norm() < 1e-12);
            prop_assert!((e2 - inv.epsilon).norm() < 1e-10);
            prop_assert!((f2 - inv.phi / inv.kappa).norm() < 1e-10);
            let om = scalar_value(&d.casimir().unwrap(), 1e-10).unwrap();
            prop_assert!((om - x.omega()).norm() < 1e-10);
        }

        #[test]
        fn tensor_products_satisfy_relations(xs in proptest::collection::vec(arb_ext(), 1..4), op in any::<bool>()) {
            let reps: Vec<Rep> = xs.iter().map(|x| simple_module(x).unwrap()).collect();
            let t = tensor_rep(&reps, if op { Coproduct::DeltaOp } else { Coproduct::Delta }).unwrap();
            prop_assert!(t.relation_residual().unwrap() < 1e-9);
        }

        #[test]
        fn p0_iso_intertwines(x in arb_ext()) {
            let f = p0_iso(&x).unwrap();
            let v = simple_module(&x).unwrap();
            let vv = tensor_rep(&[v.clone(), dual_module(&v).unwrap()], Coproduct::Delta).unwrap();
            prop_assert!(intertwining_residual(&f, &p0_module(), &vv) < 1e-10);
            prop_assert!(f.det().unwrap().norm() > 1e-9);
        }

        #[test]
        fn clifford_anticommutators(xs in proptest::collection::vec(arb_ext(), 2..5)) {
            let fam = clifford_family(&xs).unwrap();
            let n = xs.len();
            let id = Matrix::identity(1 << n);
            for j in 0..n {
                for k in 0..n {
                    for mu in 0..2 {
                        for nu in 0..2 {
                            let ac = fam.alpha[j][mu].anticommutator(&fam.alpha[k][nu]);
                            let expected = if j != k {
                                ZERO
                            } else {
                                let (sq1, sq2) = square_anticommutator_values(&xs, j);
                                match (mu, nu) {
                                    (0, 0) => sq1,
                                    (1, 1) => sq2,
                                    _ => mixed_anticommutator_value(&xs, j),
                                }
                            };
                            prop_assert!(ac.dist(&id.scale(expected)) < 1e-9 * (1.0 + expected.norm()));
                        }
                    }
                }
            }
        }

        #[test]
        fn betas_supercommute_with_the_coproduct(xs in proptest::collection::vec(arb_ext(), 2..5)) {
            let reps: Vec<Rep> = xs.iter().map(|x| simple_module(x).unwrap()).collect();
            let t = tensor_rep(&reps, Coproduct::Delta).unwrap();
            let (ft, om) = (t.f_tilde(), t.casimir().unwrap());
            for b in clifford_family(&xs).unwrap().beta.iter().flatten() {
                prop_assert!(t.k.anticommutator(b).max_abs() < 1e-9);
                prop_assert!(t.e.commutator(b).max_abs() < 1e-9);
                prop_assert!(ft.commutator(b).max_abs() < 1e-9);
                prop_assert!(om.anticommutator(b).max_abs() < 1e-9);
            }
        }

        #[test]
        fn mirrored_betas_supercommute_with_the_opposite_coproduct(xs in proptest::collection::vec(arb_ext(), 2..5)) {
            let duals: Vec<Rep> = xs.iter().map(|x| dual_module(&simple_module(x).unwrap()).unwrap()).collect();
            let t = tensor_rep(&duals, Coproduct::DeltaOp).unwrap();
            let (ft, om) = (t.f_tilde(), t.casimir().unwrap());
            for b in mirrored_clifford_family(&xs).unwrap().beta.iter().flatten() {
                prop_assert!(t.k.anticommutator(b).max_abs() < 1e-9);
                prop_assert!(t.e.commutator(b).max_abs() < 1e-9);
                prop_assert!(ft.commutator(b).max_abs() < 1e-9);
                prop_assert!(om.anticommutator(b).max_abs() < 1e-9);
            }
        }

        #[test]
        fn casimir_eigenspaces_split_evenly(xs in proptest::collection::vec(arb_ext(), 2..5)) {
            let prod = xs.iter().skip(1).fold(xs[0].chi, |acc, x| acc.mul(&x.chi));
            prop_assume!(prod.casimir_sq().norm() > 1e-2);
            let reps: Vec<Rep> = xs.iter().map(|x| simple_module(x).unwrap()).collect();
            let om = tensor_rep(&reps, Coproduct::Delta).unwrap().casimir().unwrap();
            let w = principal_sqrt(prod.casimir_sq());
            let n = xs.len();
            for sign in [ONE, -ONE] {
                let shifted = &om - &Matrix::identity(1 << n).scale(sign * w);
                prop_assert_eq!(nullspace(&shifted, 1e-9).dim(), 1 << (n - 1));
            }
        }

        #[test]
        fn doubled_family_is_an_exterior_algebra(xs in proptest::collection::vec(arb_ext(), 2..4)) {
            let fam = doubled_theta(&xs).unwrap();
            let gens: Vec<&Matrix> = fam.alpha.iter().flat_map(|a| a.iter()).collect();
            for a in &gens {
                for b in &gens {
                    prop_assert!(a.anticommutator(b).max_abs() < 1e-9 * (1.0 + a.max_abs() * b.max_abs()));
                }
            }
        }

        #[test]
        fn crossing_targets_are_simple(x1 in arb_ext(), x2 in arb_ext()) {
            let (a4, a3) = biquandle_b(&x1.chi, &x2.chi).unwrap();
            for x in [ExtChar { chi: a4, mu: x2.mu }, ExtChar { chi: a3, mu: x1.mu }] {
                let v = simple_module(&x).unwrap();
                let om = scalar_value(&v.casimir().unwrap(), 1e-9).unwrap();
                prop_assert!((om - x.omega()).norm() < 1e-8 * (1.0 + om.norm()));
            }
        }
    }
}
