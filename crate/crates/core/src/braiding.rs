//! Holonomy braidings and the functors they define on colored braids.
//!
//! A crossing `σ : (χ₁, χ₂) → (χ₄, χ₃)` acts on `U ⊗ U` through an algebra
//! automorphism `Ř`. On simple modules `Ř` is inner: there is a matrix `c`,
//! unique up to scale, with
//!
//! ```text
//! c · π₁₂(x) = π₄₃(Ř x) · c      for all x ∈ U ⊗ U.
//! ```
//!
//! We write down `π₄₃(Ř x)` for the six generators `K⊗1, …, 1⊗F` and solve
//! for `c` as the kernel of a stacked linear system. The mirror braiding `c̄`
//! on duals is obtained from the forward solver on inverse characters, and
//! the doubled braiding `c ⊠ c̄` is normalized on the invariant vector `v₀`.
//!
//! Braid words are composed with the first letter applied first, so the
//! matrix of `β₁β₂` is `T(β₂) · T(β₁)`.

use std::collections::HashMap;

use crate::braids::{check_len, BraidWord};
use crate::error::{Error, Result};
use crate::holonomy::{act_letter_star, biquandle_b, ExtChar, StarChar};
use crate::numerics::{kron, kron_all, nullspace, principal_fourth_root, Matrix, C64, I, ONE, ZERO};
use crate::uqi::{
    dual_module, intertwiners, interleave_permutation, simple_module, tensor_rep, CliffordFamily, Coproduct, Gen, Rep,
};

/// Relative cutoff for the numerical kernel of the braiding systems.
const KERNEL_TOL: f64 = 1e-9;

/// Images of the six generators `K⊗1, 1⊗K, E⊗1, 1⊗E, F⊗1, 1⊗F` as 4×4
/// matrices, indexed by `(generator, leg)` with leg 0 or 1.
#[derive(Clone, Debug)]
pub struct LegImages {
    pub images: [[Matrix; 2]; 3],
}

impl LegImages {
    pub fn get(&self, g: Gen, leg: usize) -> &Matrix {
        let row = match g {
            Gen::K => 0,
            Gen::E => 1,
            Gen::F => 2,
        };
        &self.images[row][leg]
    }

    /// The six images in a fixed order.
    pub fn iter(&self) -> impl Iterator<Item = (Gen, usize, &Matrix)> {
        Gen::ALL.into_iter().flat_map(move |g| (0..2).map(move |leg| (g, leg, self.get(g, leg))))
    }

    /// `u ⊗ 1` and `1 ⊗ u` on `V₁ ⊗ V₂`.
    pub fn of_tensor(r1: &Rep, r2: &Rep) -> Self {
        let (i1, i2) = (Matrix::identity(r1.dim()), Matrix::identity(r2.dim()));
        let leg = |g: Gen| [kron(r1.image(g), &i2), kron(&i1, r2.image(g))];
        LegImages { images: [leg(Gen::K), leg(Gen::E), leg(Gen::F)] }
    }
}

/// Source and target of a crossing `(x₁, x₂) → (x₄, x₃)`; the fractional
/// eigenvalues follow the strands, so `μ(x₄) = μ(x₂)` and `μ(x₃) = μ(x₁)`.
pub fn crossing_target(x1: &ExtChar, x2: &ExtChar) -> Result<(ExtChar, ExtChar)> {
    let (a4, a3) = biquandle_b(&x1.chi, &x2.chi)?;
    Ok((ExtChar { chi: a4, mu: x2.mu }, ExtChar { chi: a3, mu: x1.mu }))
}

/// `π₄₃(Ř x)` for the six generators, in the target representation.
///
/// `Ř(E⊗1) = K⊗E`, `Ř(1⊗F) = F⊗K⁻¹` and `Ř(K⊗1) = 1⊗K − i KF⊗E` are given
/// directly; the other three follow from `Ř ∘ Δ = Δ`.
pub fn rhat_images(x1: &ExtChar, x2: &ExtChar) -> Result<LegImages> {
    let (x4, x3) = crossing_target(x1, x2)?;
    let (r4, r3) = (simple_module(&x4)?, simple_module(&x3)?);
    let id = Matrix::identity(2);
    let k3i = r3.k_inv()?;
    let re1 = kron(&r4.k, &r3.e);
    let r1f = kron(&r4.f, &k3i);
    let rk1 = &kron(&id, &r3.k) - &kron(&(&r4.k * &r4.f), &r3.e).scale(I);
    let rk1_inv = rk1.inverse().map_err(|_| Error::LocalizationLocus)?;
    if !rk1_inv.is_finite() || rk1_inv.max_abs() * rk1.max_abs() > 1e12 {
        return Err(Error::LocalizationLocus);
    }
    let r1k = &rk1_inv * &kron(&r4.k, &r3.k);
    let delta = tensor_rep(&[r4.clone(), r3.clone()], Coproduct::Delta)?;
    let r1e = &delta.e - &(&re1 * &r1k);
    let rf1 = &delta.f - &(&rk1_inv * &r1f);
    Ok(LegImages { images: [[rk1, r1k], [re1, r1e], [rf1, r1f]] })
}

/// A holonomy braiding `c : V(x₁) ⊗ V(x₂) → V(x₄) ⊗ V(x₃)`.
#[derive(Clone, Debug)]
pub struct BraidingCell {
    pub source: [ExtChar; 2],
    pub target: [ExtChar; 2],
    /// Normalized so that `det c = 1` (principal fourth root).
    pub c: Matrix,
    /// Largest entry of `c·π₁₂(x) − π₄₃(Řx)·c` over the generators,
    /// relative to the size of the images.
    pub residual: f64,
    /// Separation of the one-dimensional kernel from the rest of the spectrum.
    pub gap: f64,
}

/// Solve `c · S(u) = T(u) · c` for every pair of images, returning the
/// kernel basis as matrices together with diagnostics.
fn solve_intertwining(src: &LegImages, tgt: &LegImages) -> Result<(Matrix, f64)> {
    let d = src.images[0][0].rows();
    let id = Matrix::identity(d);
    let blocks: Vec<Matrix> = src
        .iter()
        .zip(tgt.iter())
        .map(|((_, _, s), (_, _, t))| &kron(&id, &s.transpose()) - &kron(t, &id))
        .collect();
    let ns = nullspace(&Matrix::vstack(&blocks)?, KERNEL_TOL);
    if ns.dim() != 1 {
        let tail = ns.singular_values.iter().rev().take(3).copied().collect();
        return Err(Error::BraidingNotUnique { dim: ns.dim(), tail });
    }
    let c = Matrix::from_vec(d, d, ns.basis[0].entries().to_vec())?;
    Ok((c, ns.gap_ratio()))
}

fn intertwining_residual(c: &Matrix, src: &LegImages, tgt: &LegImages) -> f64 {
    src.iter()
        .zip(tgt.iter())
        .map(|((_, _, s), (_, _, t))| {
            let scale = 1.0 + s.max_abs().max(t.max_abs());
            (&(c * s) - &(t * c)).max_abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Rescale to determinant one with the principal fourth root.
pub fn det_normalize(c: &Matrix) -> Result<Matrix> {
    let d = c.det()?;
    if d.norm() == 0.0 || !d.is_finite() {
        return Err(Error::NormalizationFailure);
    }
    Ok(c.scale(ONE / principal_fourth_root(d)))
}

/// The holonomy braiding on simple modules.
pub fn solve_braiding(x1: &ExtChar, x2: &ExtChar) -> Result<BraidingCell> {
    let (x4, x3) = crossing_target(x1, x2)?;
    let src = LegImages::of_tensor(&simple_module(x1)?, &simple_module(x2)?);
    let tgt = rhat_images(x1, x2)?;
    let (c, gap) = solve_intertwining(&src, &tgt)?;
    let c = det_normalize(&c)?;
    let residual = intertwining_residual(&c, &src, &tgt) / c.max_abs().max(f64::MIN_POSITIVE);
    Ok(BraidingCell { source: [*x1, *x2], target: [x4, x3], c, residual, gap })
}

/// The isomorphism `V(χ, μ)* → V(χ⁻¹, μ)`.
pub fn dual_iso(x: &ExtChar) -> Result<Matrix> {
    let dual = dual_module(&simple_module(x)?)?;
    let target = simple_module(&ExtChar { chi: x.chi.inverse(), mu: x.mu })?;
    let (maps, ns) = intertwiners(&dual, &target, KERNEL_TOL)?;
    if ns.dim() != 1 {
        let tail = ns.singular_values.iter().rev().take(3).copied().collect();
        return Err(Error::BraidingNotUnique { dim: ns.dim(), tail }.context("dual isomorphism"));
    }
    Ok(maps.into_iter().next().expect("one basis vector"))
}

/// The flip `v ⊗ w ↦ w ⊗ v` on `ℂ² ⊗ ℂ²`.
pub fn swap2() -> Matrix {
    Matrix::from_fn(4, 4, |r, c| if r == 2 * (c % 2) + c / 2 { ONE } else { ZERO })
}

fn inv_ext(x: &ExtChar, mu: C64) -> ExtChar {
    ExtChar { chi: x.chi.inverse(), mu }
}

/// The mirror braiding `c̄ : V(x₁)* ⊗ V(x₂)* → V(x₄)* ⊗ V(x₃)*`.
///
/// Solve the forward braiding for the crossing `(χ₃⁻¹, χ₄⁻¹) → (χ₂⁻¹, χ₁⁻¹)`,
/// invert it, conjugate by the flip and move to duals with the isomorphisms
/// `f : V(χ)* → V(χ⁻¹)`:
/// `c̄ = (f₄⁻¹ ⊗ f₃⁻¹) τ c'⁻¹ τ (f₁ ⊗ f₂)`.
pub fn mirror_braiding(x1: &ExtChar, x2: &ExtChar) -> Result<BraidingCell> {
    let (x4, x3) = crossing_target(x1, x2)?;
    let y3 = inv_ext(&x3, x1.mu);
    let y4 = inv_ext(&x4, x2.mu);
    let inner = solve_braiding(&y3, &y4).map_err(|e| e.context("mirror crossing on inverse characters"))?;
    let f: Vec<Matrix> = [x1, x2, &x3, &x4].iter().map(|x| dual_iso(x)).collect::<Result<_>>()?;
    let sw = swap2();
    let left = kron(&f[3].inverse()?, &f[2].inverse()?);
    let right = kron(&f[0], &f[1]);
    let cbar = &(&(&(&left * &sw) * &inner.c.inverse()?) * &sw) * &right;
    let cbar = det_normalize(&cbar)?;
    let residual = opposite_equivariance_residual(&cbar, x1, x2, &x4, &x3)?;
    Ok(BraidingCell { source: [*x1, *x2], target: [x4, x3], c: cbar, residual, gap: inner.gap })
}

/// Largest deviation of `c̄ Δᵒᵖ(u) = Δᵒᵖ(u) c̄` between the dual tensor
/// products at both ends of the crossing.
pub fn opposite_equivariance_residual(
    cbar: &Matrix,
    x1: &ExtChar,
    x2: &ExtChar,
    x4: &ExtChar,
    x3: &ExtChar,
) -> Result<f64> {
    let duals = |a: &ExtChar, b: &ExtChar| -> Result<Rep> {
        tensor_rep(&[dual_module(&simple_module(a)?)?, dual_module(&simple_module(b)?)?], Coproduct::DeltaOp)
    };
    let (s, t) = (duals(x1, x2)?, duals(x4, x3)?);
    let scale = cbar.max_abs() * (1.0 + s.e.max_abs().max(s.f.max_abs()).max(t.e.max_abs()).max(t.f.max_abs()));
    Ok(Gen::ALL
        .iter()
        .map(|&g| (&(cbar * s.image(g)) - &(t.image(g) * cbar)).max_abs() / scale)
        .fold(0.0, f64::max))
}

/// `⊗ⱼ (|0⟩⟨0| + |1⟩⟨1|)` on `(V₁ ⊠ V₁*) ⊗ ⋯ ⊗ (Vₙ ⊠ Vₙ*)`.
pub fn v0(n: usize) -> Matrix {
    let z = Matrix::column(&[ONE, ZERO, ZERO, ONE]);
    kron_all(std::iter::repeat_n(&z, n))
}

/// The doubled braiding `C = c ⊠ c̄` on the interleaved space, normalized so
/// that `C v₀ = v₀`.
#[derive(Clone, Debug)]
pub struct DoubledCell {
    pub source: [ExtChar; 2],
    pub target: [ExtChar; 2],
    pub c: Matrix,
    /// The scalar removed by the normalization, `c ⊠ c̄ · v₀ = α v₀` with
    /// the det-normalized `c`, `c̄`.
    pub alpha: C64,
    /// `|c ⊠ c̄ · v₀ − α v₀| / |c ⊠ c̄ · v₀|` before normalization.
    pub v0_residual: f64,
}

/// `c ⊠ c̄` on `(V₁ ⊠ V₁*) ⊗ (V₂ ⊠ V₂*)`, without normalization.
pub fn doubled_unnormalized(fwd: &BraidingCell, bar: &BraidingCell) -> Matrix {
    let p = interleave_permutation(2);
    &(&p * &kron(&fwd.c, &bar.c)) * &p.transpose()
}

/// Write `w = α v + r` with `r ⟂ v`; return `α` and `|r| / |w|`.
pub fn project_on(w: &Matrix, v: &Matrix) -> (C64, f64) {
    let dot = |a: &Matrix, b: &Matrix| a.entries().iter().zip(b.entries()).map(|(x, y)| x.conj() * y).sum::<C64>();
    let alpha = dot(v, w) / dot(v, v);
    let r = w - &v.scale(alpha);
    (alpha, r.norm() / w.norm().max(f64::MIN_POSITIVE))
}

pub fn doubled_braiding(x1: &ExtChar, x2: &ExtChar) -> Result<DoubledCell> {
    let fwd = solve_braiding(x1, x2)?;
    let bar = mirror_braiding(x1, x2)?;
    let raw = doubled_unnormalized(&fwd, &bar);
    let v = v0(2);
    let (alpha, v0_residual) = project_on(&(&raw * &v), &v);
    if alpha.norm() <= 1e-300 || !alpha.is_finite() {
        return Err(Error::NormalizationFailure);
    }
    Ok(DoubledCell { source: fwd.source, target: fwd.target, c: raw.scale(ONE / alpha), alpha, v0_residual })
}

/// Which functor to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Functor {
    /// `ℱ` on `⊗ V(xⱼ)`, defined up to a power of `i`.
    Forward,
    /// `ℱ̄` on `⊗ V(xⱼ)*`, defined up to a power of `i`.
    Mirror,
    /// `𝒯` on `⊗ V(xⱼ) ⊠ V(xⱼ)*`, no ambiguity.
    Doubled,
}

impl Functor {
    /// Dimension of a single tensor factor.
    pub fn factor_dim(self) -> usize {
        match self {
            Functor::Forward | Functor::Mirror => 2,
            Functor::Doubled => 4,
        }
    }

    fn cell(self, x1: &ExtChar, x2: &ExtChar) -> Result<Matrix> {
        Ok(match self {
            Functor::Forward => solve_braiding(x1, x2)?.c,
            Functor::Mirror => mirror_braiding(x1, x2)?.c,
            Functor::Doubled => doubled_braiding(x1, x2)?.c,
        })
    }
}

/// Matrix of a colored braid together with the colors at its far end.
#[derive(Clone, Debug)]
pub struct FunctorValue {
    pub matrix: Matrix,
    pub target: Vec<ExtChar>,
}

/// `(I ⊗ cell ⊗ I) · m`, with `cell` acting on factors `i, i+1` (1-based) of
/// `n` factors of dimension `d`.
pub fn apply_local(cell: &Matrix, i: usize, n: usize, d: usize, m: &Matrix) -> Matrix {
    let mid = d * d;
    let right = d.pow((n - i - 1) as u32);
    let left = d.pow((i - 1) as u32);
    let cols = m.cols();
    let mut out = Matrix::zeros(m.rows(), cols);
    for l in 0..left {
        for rr in 0..right {
            for a in 0..mid {
                let row = (l * mid + a) * right + rr;
                for b in 0..mid {
                    let w = cell[(a, b)];
                    if w == ZERO {
                        continue;
                    }
                    let src = (l * mid + b) * right + rr;
                    for col in 0..cols {
                        out[(row, col)] += w * m[(src, col)];
                    }
                }
            }
        }
    }
    out
}

fn key(xs: &[ExtChar]) -> Vec<u64> {
    xs.iter()
        .flat_map(|x| {
            let StarChar { kappa, epsilon, phi } = x.chi;
            [kappa, epsilon, phi, x.mu]
        })
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .collect()
}

/// Evaluate a functor on a colored braid. Negative letters use the inverse
/// of the cell of the crossing that ends at the current colors.
pub fn functor(kind: Functor, word: &BraidWord, xs: &[ExtChar]) -> Result<FunctorValue> {
    check_len(word, xs.len())?;
    let n = xs.len();
    let d = kind.factor_dim();
    let mut cache: HashMap<(Vec<u64>, bool), Matrix> = HashMap::new();
    let mut cur = xs.to_vec();
    let mut acc = Matrix::identity(d.pow(n as u32));
    for (position, &l) in word.letters().iter().enumerate() {
        let i = l.unsigned_abs() as usize;
        let mut next = cur.clone();
        act_letter_star(l, &mut next).map_err(|e| match e {
            Error::InadmissibleCrossing { .. } => Error::InadmissibleCrossing { position },
            other => other,
        })?;
        let (a, b) = if l > 0 { (cur[i - 1], cur[i]) } else { (next[i - 1], next[i]) };
        let k = (key(&[a, b]), l > 0);
        let cell = match cache.get(&k) {
            Some(m) => m.clone(),
            None => {
                let c = kind.cell(&a, &b).map_err(|e| e.context(format!("crossing at letter {position}")))?;
                let m = if l > 0 { c } else { c.inverse()? };
                cache.insert(k, m.clone());
                m
            }
        };
        acc = apply_local(&cell, i, n, d, &acc);
        cur = next;
    }
    Ok(FunctorValue { matrix: acc, target: cur })
}

pub fn functor_f(word: &BraidWord, xs: &[ExtChar]) -> Result<FunctorValue> {
    functor(Functor::Forward, word, xs)
}

pub fn functor_fbar(word: &BraidWord, xs: &[ExtChar]) -> Result<FunctorValue> {
    functor(Functor::Mirror, word, xs)
}

pub fn functor_t(word: &BraidWord, xs: &[ExtChar]) -> Result<FunctorValue> {
    functor(Functor::Doubled, word, xs)
}

/// The power `k` minimizing `|a − iᵏ b|`, with the resulting distance.
pub fn align_phase(a: &Matrix, b: &Matrix) -> (u32, f64) {
    let mut best = (0, f64::INFINITY);
    let mut p = ONE;
    for k in 0..4 {
        let d = a.dist(&b.scale(p));
        if d < best.1 {
            best = (k, d);
        }
        p *= I;
    }
    best
}

/// Coefficients of `c β c⁻¹` in the target `β` basis, for `σ_i` acting on
/// `xs`. Row `r` holds the expansion of the `r`th source basis element, so
/// the result is directly comparable with the nice Burau generator. Also
/// returns the largest relative distance of a conjugate from the target span.
pub fn schur_weyl_matrix(xs: &[ExtChar], i: usize) -> Result<(Matrix, Vec<StarChar>, f64)> {
    let n = xs.len();
    let cell = solve_braiding(&xs[i - 1], &xs[i])?;
    let mut tgt = xs.to_vec();
    tgt[i - 1] = cell.target[0];
    tgt[i] = cell.target[1];
    let c = apply_local(&cell.c, i, n, 2, &Matrix::identity(1 << n));
    let c_inv = c.inverse()?;
    let src_fam = crate::uqi::clifford_family(xs)?;
    let tgt_fam = crate::uqi::clifford_family(&tgt)?;
    let (coef, span_res) = expand_conjugates(&c, &c_inv, &src_fam, &tgt_fam)?;
    Ok((coef, tgt.iter().map(|x| x.chi).collect(), span_res))
}

/// Least-squares expansion of `c b c⁻¹` for each source `b` in the target
/// basis.
fn expand_conjugates(
    c: &Matrix,
    c_inv: &Matrix,
    src: &CliffordFamily,
    tgt: &CliffordFamily,
) -> Result<(Matrix, f64)> {
    let basis = tgt.beta_basis();
    let m = basis.len();
    let len = basis[0].rows() * basis[0].cols();
    let a = Matrix::from_fn(len, m, |r, j| basis[j].entries()[r]);
    let ah = a.adjoint();
    let gram = &ah * &a;
    let mut coef = Matrix::zeros(m, m);
    let mut worst: f64 = 0.0;
    for (r, b) in src.beta_basis().into_iter().enumerate() {
        let conj = &(c * b) * c_inv;
        let y = Matrix::from_vec(len, 1, conj.entries().to_vec())?;
        let x = gram.solve(&(&ah * &y))?;
        let fit = &a * &x;
        worst = worst.max(fit.dist(&y) / y.norm().max(f64::MIN_POSITIVE));
        for j in 0..m {
            coef[(r, j)] = x[(j, 0)];
        }
    }
    Ok((coef, worst))
}
