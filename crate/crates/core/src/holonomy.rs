//! SL₂(ℂ) colors and their SL₂(ℂ)* coordinates.
//!
//! A point `a = (κ, ε, φ)` of the dual group is the pair of triangular
//! matrices
//!
//! ```text
//! a⁺ = [[κ, 0], [φ, 1]]      a⁻ = [[1, ε], [0, κ]]
//! ```
//!
//! and `ψ(a) = a⁺ (a⁻)⁻¹ = [[κ, −ε], [φ, (1 − εφ)/κ]]`. The same triple is read
//! as a character of the central subalgebra with `K² ↦ κ`, `E² ↦ ε`,
//! `F² ↦ φ/κ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::braids::{check_len, BraidWord};
use crate::error::{Error, Result};
use crate::numerics::{c, eig2, principal_sqrt, Matrix, C64, ONE, ZERO};

/// Relative threshold below which a denominator counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// An element of SL₂(ℂ).
#[derive(Clone, Debug, PartialEq)]
pub struct SL2Elem {
    m: Matrix,
}

impl SL2Elem {
    /// Accept a 2x2 matrix whose determinant is 1 within `1e-8` relative to
    /// the squared entry scale.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::Dimension(format!("SL2 element must be 2x2, got {}x{}", m.rows(), m.cols())));
        }
        if !m.is_finite() {
            return Err(Error::Dimension("non-finite SL2 entry".into()));
        }
        let d = m.det()?;
        let scale = m.max_abs().powi(2).max(1.0);
        if (d - ONE).norm() > 1e-8 * scale {
            return Err(Error::Dimension(format!("determinant {d} is not 1")));
        }
        Ok(SL2Elem { m })
    }

    /// Divide by a square root of the determinant.
    pub fn normalized(m: &Matrix) -> Result<Self> {
        let d = m.det()?;
        if d.norm() < 1e-12 {
            return Err(Error::Dimension("cannot normalize a singular matrix".into()));
        }
        SL2Elem::new(m.scale(ONE / principal_sqrt(d)))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        SL2Elem { m }
    }

    pub fn identity() -> Self {
        SL2Elem { m: Matrix::identity(2) }
    }

    /// `diag(t, 1/t)`.
    pub fn diag(t: C64) -> Self {
        SL2Elem { m: Matrix::diag(&[t, ONE / t]) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Inverse via the adjugate (exact for determinant 1).
    pub fn inverse(&self) -> SL2Elem {
        let m = &self.m;
        let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let adj = Matrix::from_rows(&[[m[(1, 1)], -m[(0, 1)]], [-m[(1, 0)], m[(0, 0)]]]);
        SL2Elem { m: adj.scale(ONE / d) }
    }

    pub fn mul(&self, other: &SL2Elem) -> SL2Elem {
        SL2Elem { m: &self.m * &other.m }
    }

    /// `c · self · c⁻¹`.
    pub fn conjugate_by(&self, c: &SL2Elem) -> SL2Elem {
        c.mul(self).mul(&c.inverse())
    }

    pub fn dist(&self, other: &SL2Elem) -> f64 {
        self.m.dist(&other.m)
    }

    /// Whether the trace is 2 within `tol` (1 is an eigenvalue).
    pub fn is_singular(&self, tol: f64) -> bool {
        (self.trace() - 2.0).norm() <= tol
    }
}

/// Coordinates `(κ, ε, φ)` on SL₂(ℂ)*.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarChar {
    pub kappa: C64,
    pub epsilon: C64,
    pub phi: C64,
}

impl StarChar {
    pub fn new(kappa: C64, epsilon: C64, phi: C64) -> Result<Self> {
        if kappa.norm() <= DEGENERACY_TOL {
            return Err(Error::DegenerateCharacter);
        }
        Ok(StarChar { kappa, epsilon, phi })
    }

    /// The character `(κ, 0, 0)`, whose ψ-image is `diag(κ, 1/κ)`.
    pub fn diagonal(kappa: C64) -> Self {
        StarChar { kappa, epsilon: ZERO, phi: ZERO }
    }

    pub fn identity() -> Self {
        StarChar::diagonal(ONE)
    }

    pub fn plus(&self) -> Matrix {
        Matrix::from_rows(&[[self.kappa, ZERO], [self.phi, ONE]])
    }

    pub fn minus(&self) -> Matrix {
        Matrix::from_rows(&[[ONE, self.epsilon], [ZERO, self.kappa]])
    }

    /// Group product, computed factorwise: `(ab)^± = a^± b^±`.
    pub fn mul(&self, b: &StarChar) -> StarChar {
        StarChar {
            kappa: self.kappa * b.kappa,
            epsilon: b.epsilon + self.epsilon * b.kappa,
            phi: self.phi * b.kappa + b.phi,
        }
    }

    /// Group inverse; equals the character composed with the antipode.
    pub fn inverse(&self) -> StarChar {
        StarChar { kappa: ONE / self.kappa, epsilon: -self.epsilon / self.kappa, phi: -self.phi / self.kappa }
    }

    /// Trace of ψ(a).
    pub fn trace_psi(&self) -> C64 {
        self.kappa + (ONE - self.epsilon * self.phi) / self.kappa
    }

    /// Value of the squared Casimir, `tr ψ(a) − 2`.
    pub fn casimir_sq(&self) -> C64 {
        self.trace_psi() - 2.0
    }

    pub fn is_singular(&self, tol: f64) -> bool {
        self.casimir_sq().norm() <= tol
    }

    pub fn dist(&self, other: &StarChar) -> f64 {
        (self.kappa - other.kappa)
            .norm()
            .max((self.epsilon - other.epsilon).norm())
            .max((self.phi - other.phi).norm())
    }

    pub fn is_finite(&self) -> bool {
        [self.kappa, self.epsilon, self.phi].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// A character together with a fractional eigenvalue `μ`, labelling the
/// simple module `V(χ, μ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtChar {
    pub chi: StarChar,
    pub mu: C64,
}

impl ExtChar {
    /// Check `(μ − μ⁻¹)² = tr ψ(χ) − 2` up to `tol` (relative to the size of
    /// both sides).
    pub fn new(chi: StarChar, mu: C64, tol: f64) -> Result<Self> {
        if mu.norm() <= DEGENERACY_TOL {
            return Err(Error::BadFractionalEigenvalue { residual: f64::INFINITY });
        }
        let w = mu - ONE / mu;
        let lhs = w * w;
        let rhs = chi.casimir_sq();
        let residual = (lhs - rhs).norm() / (1.0 + lhs.norm().max(rhs.norm()));
        if residual > tol {
            return Err(Error::BadFractionalEigenvalue { residual });
        }
        Ok(ExtChar { chi, mu })
    }

    /// Pair `chi` with its default fractional eigenvalue.
    pub fn with_default_mu(chi: StarChar) -> Self {
        ExtChar { chi, mu: default_mu(&chi) }
    }

    /// `ω = μ − μ⁻¹`, the scalar by which the Casimir acts on `V(χ, μ)`.
    pub fn omega(&self) -> C64 {
        self.mu - ONE / self.mu
    }

    pub fn is_nonsingular(&self, tol: f64) -> bool {
        self.omega().norm() > tol
    }
}

/// `ψ(a) = a⁺ (a⁻)⁻¹`.
pub fn psi(a: &StarChar) -> Result<SL2Elem> {
    if a.kappa.norm() <= DEGENERACY_TOL {
        return Err(Error::DegenerateCharacter);
    }
    Ok(SL2Elem::from_matrix_unchecked(Matrix::from_rows(&[
        [a.kappa, -a.epsilon],
        [a.phi, (ONE - a.epsilon * a.phi) / a.kappa],
    ])))
}

/// The unique `a` with `ψ(a) = h`; needs `h₁₁ ≠ 0`.
pub fn factorize(h: &SL2Elem) -> Result<StarChar> {
    let scale = h.matrix().max_abs().max(1.0);
    if h.get(0, 0).norm() <= DEGENERACY_TOL * scale {
        return Err(Error::InadmissibleElement);
    }
    Ok(StarChar { kappa: h.get(0, 0), epsilon: -h.get(0, 1), phi: h.get(1, 0) })
}

/// `g_i = P ψ(a_i) P⁻¹` with `P = a₁⁺ ⋯ a_{i−1}⁺`.
pub fn defactorize_tuple(a: &[StarChar]) -> Result<Vec<SL2Elem>> {
    let mut p = Matrix::identity(2);
    let mut out = Vec::with_capacity(a.len());
    for ai in a {
        let h = psi(ai)?;
        let p_inv = p.inverse()?;
        out.push(SL2Elem::from_matrix_unchecked(&(&p * h.matrix()) * &p_inv));
        p = &p * &ai.plus();
    }
    Ok(out)
}

/// Inverse of [`defactorize_tuple`], peeling off one `a_i⁺` at a time.
pub fn factorize_tuple(g: &[SL2Elem]) -> Result<Vec<StarChar>> {
    let mut partial = SL2Elem::identity();
    let mut p = Matrix::identity(2);
    let mut out = Vec::with_capacity(g.len());
    for (index, gi) in g.iter().enumerate() {
        partial = gi.mul(&partial);
        let scale = partial.matrix().max_abs().max(1.0);
        if partial.get(0, 0).norm() <= DEGENERACY_TOL * scale {
            return Err(Error::InadmissibleTuple { index });
        }
        let h = &(&p.inverse()? * gi.matrix()) * &p;
        let a = factorize(&SL2Elem::from_matrix_unchecked(h)).map_err(|_| Error::InadmissibleTuple { index })?;
        p = &p * &a.plus();
        out.push(a);
    }
    Ok(out)
}

/// Every partial product `g_i ⋯ g_1` has `|(1,1) entry| > tol`.
pub fn is_admissible(g: &[SL2Elem], tol: f64) -> bool {
    admissibility_margin(g) > tol
}

/// Smallest modulus of the (1,1) entries of the partial products.
pub fn admissibility_margin(g: &[SL2Elem]) -> f64 {
    let mut partial = SL2Elem::identity();
    let mut margin = f64::INFINITY;
    for gi in g {
        partial = gi.mul(&partial);
        margin = margin.min(partial.get(0, 0).norm());
    }
    margin
}

fn is_zero(x: C64, scale: f64) -> bool {
    x.norm() <= DEGENERACY_TOL * scale.max(1.0)
}

/// The biquandle map `B(a₁, a₂) = (a₄, a₃)` of a positive crossing, the
/// unique solution of `a₁⁺a₂⁺ = a₄⁺a₃⁺`, `a₁⁻a₂⁻ = a₄⁻a₃⁻`,
/// `a₁⁻a₂⁺ = a₄⁺a₃⁻`.
pub fn biquandle_b(a1: &StarChar, a2: &StarChar) -> Result<(StarChar, StarChar)> {
    let (k1, e1, f1) = (a1.kappa, a1.epsilon, a1.phi);
    let (k2, e2, f2) = (a2.kappa, a2.epsilon, a2.phi);
    let d = e1 * f2 + k2;
    if is_zero(d, (e1 * f2).norm().max(k2.norm())) || is_zero(k1, 1.0) || is_zero(k2, 1.0) {
        return Err(Error::InadmissibleCrossing { position: 0 });
    }
    let a4 = StarChar {
        kappa: d,
        epsilon: (e1 * k2 * k2 + e2 * k2 + (e1 * e1 * k2 + e1 * e2) * f2 - e1) / (k1 * k2),
        phi: k1 * f2,
    };
    let a3 = StarChar {
        kappa: k1 * k2 / d,
        epsilon: e1 / d,
        phi: (k2 * k2 * f1 + e1 * f2 * f2 + (e1 * k2 * f1 - (k1 * k1 - 1.0) * k2) * f2) / d,
    };
    Ok((a4, a3))
}

/// Inverse of [`biquandle_b`]: given `(a₄, a₃)` return `(a₁, a₂)`.
///
/// Read off from the entries of the three defining equations:
/// `ε₁ = κ₄ε₃`, `κ₁ = κ₃ + φ₄ε₃`, `φ₂ = φ₄/κ₁`, `κ₂ = κ₄ − ε₁φ₂`,
/// `ε₂ = ε₃ + ε₄κ₃ − ε₁κ₂`, `φ₁ = (φ₃ + φ₄κ₃ − φ₂)/κ₂`.
pub fn biquandle_b_inv(a4: &StarChar, a3: &StarChar) -> Result<(StarChar, StarChar)> {
    let (k4, e4, f4) = (a4.kappa, a4.epsilon, a4.phi);
    let (k3, e3, f3) = (a3.kappa, a3.epsilon, a3.phi);
    let e1 = k4 * e3;
    let k1 = k3 + f4 * e3;
    if is_zero(k1, k3.norm().max((f4 * e3).norm())) {
        return Err(Error::InadmissibleCrossing { position: 0 });
    }
    let f2 = f4 / k1;
    let k2 = k4 - e1 * f2;
    if is_zero(k2, k4.norm().max((e1 * f2).norm())) {
        return Err(Error::InadmissibleCrossing { position: 0 });
    }
    let e2 = e3 + e4 * k3 - e1 * k2;
    let f1 = (f3 + f4 * k3 - f2) / k2;
    let a1 = StarChar { kappa: k1, epsilon: e1, phi: f1 };
    let a2 = StarChar { kappa: k2, epsilon: e2, phi: f2 };
    let res = biquandle_residual(&a1, &a2, a4, a3);
    let scale = [k1, e1, f1, k2, e2, f2, k4, e4, f4, k3, e3, f3].iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !res.is_finite() || res > 1e-8 * scale * scale {
        return Err(Error::InadmissibleCrossing { position: 0 });
    }
    Ok((a1, a2))
}

/// Largest entry of the three defining equations of the biquandle.
pub fn biquandle_residual(a1: &StarChar, a2: &StarChar, a4: &StarChar, a3: &StarChar) -> f64 {
    let e1 = (&a1.plus() * &a2.plus()).dist(&(&a4.plus() * &a3.plus()));
    let e2 = (&a1.minus() * &a2.minus()).dist(&(&a4.minus() * &a3.minus()));
    let e3 = (&a1.minus() * &a2.plus()).dist(&(&a4.plus() * &a3.minus()));
    e1.max(e2).max(e3)
}

/// Apply one letter to a tuple of extended characters. Positive letters use
/// `B`, negative letters its inverse; the fractional eigenvalues travel with
/// their strands.
pub fn act_letter_star(letter: i32, xs: &mut [ExtChar]) -> Result<()> {
    let i = letter.unsigned_abs() as usize - 1;
    let (x1, x2) = (xs[i], xs[i + 1]);
    if letter > 0 {
        let (a4, a3) = biquandle_b(&x1.chi, &x2.chi)?;
        xs[i] = ExtChar { chi: a4, mu: x2.mu };
        xs[i + 1] = ExtChar { chi: a3, mu: x1.mu };
    } else {
        let (a1, a2) = biquandle_b_inv(&x1.chi, &x2.chi)?;
        xs[i] = ExtChar { chi: a1, mu: x2.mu };
        xs[i + 1] = ExtChar { chi: a2, mu: x1.mu };
    }
    Ok(())
}

/// Transport extended characters along a braid.
pub fn act_colors_star(word: &BraidWord, xs: &[ExtChar]) -> Result<Vec<ExtChar>> {
    check_len(word, xs.len())?;
    let mut out = xs.to_vec();
    for (position, &l) in word.letters().iter().enumerate() {
        act_letter_star(l, &mut out).map_err(|e| match e {
            Error::InadmissibleCrossing { .. } => Error::InadmissibleCrossing { position },
            other => other,
        })?;
    }
    Ok(out)
}

/// The four solutions `±μ, ±μ⁻¹` of `(μ − μ⁻¹)² = tr ψ(χ) − 2`, where `μ²` is
/// the larger eigenvalue of `ψ(χ)`.
pub fn fractional_eigenvalues(chi: &StarChar) -> (C64, C64, C64, C64) {
    let t = chi.trace_psi();
    let m = Matrix::from_rows(&[[t, -ONE], [ONE, ZERO]]); // companion matrix: same eigenvalues as ψ(χ)
    let (lam, _) = eig2(&m).expect("2x2 by construction");
    let mu = principal_sqrt(lam);
    (mu, -mu, ONE / mu, -ONE / mu)
}

/// Default fractional eigenvalue: `|μ| ≥ 1` and `Re μ ≥ 0`, ties broken by
/// `Im μ ≥ 0`.
pub fn default_mu(chi: &StarChar) -> C64 {
    let (a, b, cc, d) = fractional_eigenvalues(chi);
    let cands = [a, b, cc, d];
    let key = |z: &C64| {
        let outside = z.norm() >= 1.0 - 1e-12;
        let right = z.re >= -1e-14;
        let upper = z.im >= -1e-14;
        (outside as u8) * 4 + (right as u8) * 2 + upper as u8
    };
    let best = cands.iter().map(key).max().unwrap();
    // among equally ranked candidates prefer the one of largest modulus, then largest real part
    *cands
        .iter()
        .filter(|z| key(z) == best)
        .max_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.re.total_cmp(&y.re)))
        .unwrap()
}

/// Simultaneous conjugation `g_i ↦ c g_i c⁻¹`.
pub fn gauge_transform(g: &[SL2Elem], c: &SL2Elem) -> Vec<SL2Elem> {
    g.iter().map(|gi| gi.conjugate_by(c)).collect()
}

/// Attempt budget of [`find_admissible_gauge`].
pub const GAUGE_ATTEMPTS: usize = 1000;

/// Draw a pseudo-random element of SL₂(ℂ) with entries from the unit square.
pub fn random_sl2(rng: &mut impl Rng) -> SL2Elem {
    loop {
        let m = Matrix::from_fn(2, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        if let Ok(g) = SL2Elem::normalized(&m) {
            if m.det().map(|d| d.norm() > 0.05).unwrap_or(false) {
                return g;
            }
        }
    }
}

/// Draw an extended character with `κ` near 1.3, `ε, φ` in the unit square
/// and the default `μ`, rejecting those with `|ω| ≤ 0.05`.
pub fn random_ext_char(rng: &mut impl Rng) -> ExtChar {
    loop {
        let mut u = || rng.gen_range(-1.0..1.0);
        let chi = StarChar { kappa: c(1.3 + 0.6 * u(), 0.6 * u()), epsilon: c(u(), u()), phi: c(u(), u()) };
        let x = ExtChar::with_default_mu(chi);
        if x.omega().norm() > 0.05 {
            return x;
        }
    }
}

/// Search seeded random gauges until the transformed tuple is admissible with
/// margin `10·tol`.
pub fn find_admissible_gauge(g: &[SL2Elem], seed: u64, tol: f64) -> Result<SL2Elem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GAUGE_ATTEMPTS {
        let c = random_sl2(&mut rng);
        if is_admissible(&gauge_transform(g, &c), 10.0 * tol) {
            return Ok(c);
        }
    }
    Err(Error::NoAdmissibleGauge { attempts: GAUGE_ATTEMPTS })
}
