//! Twisted Burau matrices and Reidemeister torsion.
//!
//! All matrices act on row vectors, so the matrix of a word is the ordered
//! product of its letter matrices, left to right. There are `n − 1` blocks of
//! size 2, one per generator `y_j = x_j ⋯ x_1` (boundary form) or per dual
//! arc (reduced form). Blocks that would fall off either end are dropped.
//!
//! The twisting representation is the right action `ρ(x) = g(x)⁻¹`, where
//! `g` evaluates a free word on the colors. Under this convention a positive
//! letter `σ_i` has
//!
//! * boundary block column `i`: `[I; −ρ(y_{i−1}y_i⁻¹); ρ(y_{i−1}y_i⁻¹)]` with
//!   `ρ(y_{i−1}y_i⁻¹) = g_i` on the source colors;
//! * reduced block column `i`: `[I; −R; R]` with `R = ρ^∨(y_i y_{i+1}⁻¹)`,
//!   `ρ^∨` the inverse transpose, i.e. `R = g'(y_i y_{i+1}⁻¹)ᵀ` on the target
//!   colors `g'`.
//!
//! A negative letter is the inverse of the positive letter whose target is
//! the current tuple.

use crate::braids::{act_colors_sl2, act_letter_sl2, check_len, stabilize_nonsingular, total_holonomy, BraidWord};
use crate::error::{Error, Result};
use crate::holonomy::{act_letter_star, ExtChar, SL2Elem, StarChar};
use crate::numerics::{det, Matrix, C64, ONE, ZERO};

/// A Burau matrix with the color tuples at both ends of the braid.
#[derive(Clone, Debug)]
pub struct BurauMatrix {
    pub matrix: Matrix,
    pub source: Vec<SL2Elem>,
    pub target: Vec<SL2Elem>,
}

/// Which of the three Burau forms to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Boundary,
    Reduced,
    Nice,
}

fn ensure_strands(word: &BraidWord) -> Result<()> {
    if word.strands() < 2 {
        return Err(Error::Dimension("Burau matrices need at least two strands".into()));
    }
    Ok(())
}

/// Place the 2x2 block `b` at block position `(bi, bj)` (1-based) if inside.
fn put(m: &mut Matrix, blocks: usize, bi: usize, bj: usize, b: &Matrix) {
    if (1..=blocks).contains(&bi) && (1..=blocks).contains(&bj) {
        m.set_block(2 * (bi - 1), 2 * (bj - 1), b);
    }
}

fn boundary_generator(i: usize, n: usize, src: &[SL2Elem]) -> Matrix {
    let blocks = n - 1;
    let mut m = Matrix::identity(2 * blocks);
    let rho = src[i - 1].matrix();
    put(&mut m, blocks, i - 1, i, &Matrix::identity(2));
    put(&mut m, blocks, i, i, &-rho);
    put(&mut m, blocks, i + 1, i, rho);
    m
}

fn reduced_generator(i: usize, n: usize, tgt: &[SL2Elem]) -> Matrix {
    let blocks = n - 1;
    let mut m = Matrix::identity(2 * blocks);
    let rho = tgt[i].inverse().matrix().transpose();
    put(&mut m, blocks, i - 1, i, &Matrix::identity(2));
    put(&mut m, blocks, i, i, &-&rho);
    put(&mut m, blocks, i + 1, i, &rho);
    m
}

/// The nice-basis generator matrix in target coordinates.
pub fn nice_generator(i: usize, n: usize, tgt: &[StarChar]) -> Matrix {
    let (k_i, f_i) = (tgt[i - 1].kappa, tgt[i - 1].phi);
    let (k_j, e_j) = (tgt[i].kappa, tgt[i].epsilon);
    let inv = ONE / k_i;
    let full = Matrix::from_rows(&[
        [ONE, ZERO, inv, -f_i * inv, ZERO, ZERO],
        [ZERO, ONE, ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, -inv, f_i * inv, ZERO, ZERO],
        [ZERO, ZERO, -e_j, -k_j, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO, ONE, ZERO],
        [ZERO, ZERO, e_j, k_j, ZERO, ONE],
    ]);
    let dim = 2 * (n - 1);
    let mut m = Matrix::identity(dim);
    // the 6x6 block covers the blocks i−1, i, i+1
    for r in 0..6 {
        for c in 0..6 {
            let (rr, cc) = (2 * i as isize - 4 + r as isize, 2 * i as isize - 4 + c as isize);
            if (0..dim as isize).contains(&rr) && (0..dim as isize).contains(&cc) {
                m[(rr as usize, cc as usize)] = full[(r, c)];
            }
        }
    }
    m
}

fn sl2_product(
    word: &BraidWord,
    colors: &[SL2Elem],
    gen: impl Fn(usize, usize, &[SL2Elem], &[SL2Elem]) -> Matrix,
) -> Result<BurauMatrix> {
    ensure_strands(word)?;
    check_len(word, colors.len())?;
    let n = word.strands();
    let mut cur = colors.to_vec();
    let mut acc = Matrix::identity(2 * (n - 1));
    for &l in word.letters() {
        let i = l.unsigned_abs() as usize;
        let mut next = cur.clone();
        act_letter_sl2(l, &mut next);
        let step = if l > 0 { gen(i, n, &cur, &next) } else { gen(i, n, &next, &cur).inverse()? };
        acc = &acc * &step;
        cur = next;
    }
    Ok(BurauMatrix { matrix: acc, source: colors.to_vec(), target: cur })
}

/// Boundary-reduced twisted Burau matrix of a colored braid.
pub fn burau_boundary(word: &BraidWord, colors: &[SL2Elem]) -> Result<BurauMatrix> {
    sl2_product(word, colors, |i, n, src, _| boundary_generator(i, n, src))
}

/// Locally finite (reduced) twisted Burau matrix of a colored braid.
pub fn burau_reduced(word: &BraidWord, colors: &[SL2Elem]) -> Result<BurauMatrix> {
    sl2_product(word, colors, |i, n, _, tgt| reduced_generator(i, n, tgt))
}

/// Burau matrix in the nice basis, written in SL₂(ℂ)* coordinates. The
/// `source`/`target` fields hold the corresponding SL₂(ℂ) tuples.
pub fn burau_nice(word: &BraidWord, star: &[ExtChar]) -> Result<BurauMatrix> {
    ensure_strands(word)?;
    check_len(word, star.len())?;
    let n = word.strands();
    let mut cur = star.to_vec();
    let mut acc = Matrix::identity(2 * (n - 1));
    for (position, &l) in word.letters().iter().enumerate() {
        let i = l.unsigned_abs() as usize;
        let mut next = cur.clone();
        act_letter_star(l, &mut next).map_err(|_| Error::InadmissibleCrossing { position })?;
        let step = if l > 0 {
            nice_generator(i, n, &chis(&next))
        } else {
            nice_generator(i, n, &chis(&cur)).inverse()?
        };
        acc = &acc * &step;
        cur = next;
    }
    let source = crate::holonomy::defactorize_tuple(&chis(star))?;
    let target = crate::holonomy::defactorize_tuple(&chis(&cur))?;
    Ok(BurauMatrix { matrix: acc, source, target })
}

fn chis(xs: &[ExtChar]) -> Vec<StarChar> {
    xs.iter().map(|x| x.chi).collect()
}

/// Change of basis `Q = blockdiag((a₁⁺ ⋯ a_j⁺)ᵀ)` for `j = 1..n−1`, relating
/// the two reduced forms: `nice(β) = Q_src · reduced(β) · Q_tgt⁻¹`.
pub fn nice_basis_change(a: &[StarChar]) -> Matrix {
    let mut p = Matrix::identity(2);
    let mut blocks = Vec::new();
    for aj in a.iter().take(a.len().saturating_sub(1)) {
        p = &p * &aj.plus();
        blocks.push(p.transpose());
    }
    Matrix::direct_sum(&blocks)
}

/// Build any of the three variants from SL₂(ℂ) colors. The nice form needs an
/// admissible tuple.
pub fn burau(word: &BraidWord, colors: &[SL2Elem], variant: Variant) -> Result<BurauMatrix> {
    match variant {
        Variant::Boundary => burau_boundary(word, colors),
        Variant::Reduced => burau_reduced(word, colors),
        Variant::Nice => {
            let a = crate::holonomy::factorize_tuple(colors)?;
            let xs: Vec<ExtChar> = a.into_iter().map(|chi| ExtChar { chi, mu: ONE }).collect();
            burau_nice(word, &xs)
        }
    }
}

/// `det(1 − B)`; the empty matrix gives 1.
pub fn det_one_minus(b: &Matrix) -> Result<C64> {
    det(&(&Matrix::identity(b.rows()) - b))
}

/// Largest entry of `β(g) − g`, relative to the color scale.
pub fn closure_residual(word: &BraidWord, colors: &[SL2Elem]) -> Result<f64> {
    let moved = act_colors_sl2(word, colors)?;
    Ok(moved
        .iter()
        .zip(colors)
        .map(|(a, b)| a.dist(b) / (1.0 + b.matrix().max_abs()))
        .fold(0.0, f64::max))
}

/// Threshold used to decide that colors are fixed by the braid.
pub const CLOSURE_TOL: f64 = 1e-7;

/// Details of a torsion evaluation.
#[derive(Clone, Debug)]
pub struct TorsionReport {
    pub value: C64,
    pub numerator: C64,
    pub denominator: C64,
    pub stabilizations: usize,
    pub word: BraidWord,
    pub colors: Vec<SL2Elem>,
}

/// Twisted Reidemeister torsion `det(1 − B(β)) / det(1 − h⁻¹)` of the
/// closure, `h = g_n ⋯ g_1`, with the reduced Burau matrix. Defined up to sign.
pub fn torsion(word: &BraidWord, colors: &[SL2Elem], auto_stabilize: bool) -> Result<C64> {
    torsion_report(word, colors, auto_stabilize, crate::numerics::DEFAULT_TOL).map(|t| t.value)
}

/// [`torsion`] with the intermediate quantities.
pub fn torsion_report(word: &BraidWord, colors: &[SL2Elem], auto_stabilize: bool, tol: f64) -> Result<TorsionReport> {
    check_len(word, colors.len())?;
    let residual = closure_residual(word, colors)?;
    if residual > CLOSURE_TOL {
        return Err(Error::NotClosure { residual });
    }
    for (index, g) in colors.iter().enumerate() {
        if g.is_singular(tol) {
            return Err(Error::SingularMeridian { index });
        }
    }
    let (word, colors, stabilizations) = if total_holonomy(colors).is_singular(tol) {
        if !auto_stabilize {
            return Err(Error::SingularTotalHolonomy);
        }
        let s = stabilize_nonsingular(word, colors, tol)?;
        (s.word, s.colors, s.added)
    } else {
        (word.clone(), colors.to_vec(), 0)
    };
    let numerator = if word.strands() < 2 {
        ONE
    } else {
        det_one_minus(&burau_reduced(&word, &colors)?.matrix)?
    };
    let h_inv = total_holonomy(&colors).inverse();
    let denominator = det_one_minus(h_inv.matrix())?;
    Ok(TorsionReport { value: numerator / denominator, numerator, denominator, stabilizations, word, colors })
}

/// The same torsion from the boundary form, `det(1 − B^∂(β)) / det(1 − h)`.
pub fn torsion_boundary(word: &BraidWord, colors: &[SL2Elem]) -> Result<C64> {
    let numerator = if word.strands() < 2 { ONE } else { det_one_minus(&burau_boundary(word, colors)?.matrix)? };
    Ok(numerator / det_one_minus(total_holonomy(colors).matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::{defactorize_tuple, factorize_tuple, gauge_transform, random_sl2};
    use crate::numerics::{c, r};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(n: usize, l: &[i32]) -> BraidWord {
        BraidWord::new(n, l.to_vec()).unwrap()
    }

    fn diag4(n: usize) -> Vec<SL2Elem> {
        vec![SL2Elem::diag(r(4.0)); n]
    }

    #[test]
    fn identity_word_gives_identity() {
        let g = diag4(3);
        for v in [Variant::Boundary, Variant::Reduced, Variant::Nice] {
            assert_eq!(burau(&w(3, &[]), &g, v).unwrap().matrix, Matrix::identity(4));
        }
        assert!(burau_reduced(&w(1, &[]), &diag4(1)).is_err());
    }

    #[test]
    fn single_crossing_on_two_strands() {
        // y₁y₂⁻¹ = x₂⁻¹, so the lone block is −ρ(x₂⁻¹) evaluated on the colors
        let b = burau_boundary(&w(2, &[1]), &diag4(2)).unwrap();
        let expected = SL2Elem::diag(r(4.0)).matrix().scale(-ONE);
        assert!(b.matrix.dist(&expected) < 1e-15);
    }

    #[test]
    fn trefoil_determinant() {
        let b = burau_reduced(&w(2, &[1, 1, 1]), &diag4(2)).unwrap();
        let d = det_one_minus(&b.matrix).unwrap();
        assert!((d - 4225.0 / 64.0).norm() < 1e-12);
    }

    #[test]
    fn torsion_examples() {
        let t = torsion(&w(1, &[]), &diag4(1), false).unwrap();
        assert!((t + 4.0 / 9.0).norm() < 1e-14);
        let t = torsion(&w(2, &[1, 1, 1]), &diag4(2), false).unwrap();
        assert!((t + 4225.0 / 900.0).norm() < 1e-12);
        let bad = vec![SL2Elem::diag(r(4.0)), SL2Elem::diag(r(3.0))];
        assert!(matches!(torsion(&w(2, &[1]), &bad, false), Err(Error::NotClosure { .. })));
    }

    #[test]
    fn torsion_is_gauge_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = torsion(&w(2, &[1, 1, 1]), &diag4(2), false).unwrap();
        for _ in 0..20 {
            let g = gauge_transform(&diag4(2), &random_sl2(&mut rng));
            let t = torsion(&w(2, &[1, 1, 1]), &g, false).unwrap();
            assert!((t.norm() - base.norm()).abs() < 1e-8 * base.norm());
        }
    }

    #[test]
    fn total_holonomy_examples() {
        let g = SL2Elem::diag(c(0.5, 0.5));
        assert!(total_holonomy(std::slice::from_ref(&g)).dist(&g) < 1e-15);
        assert!(total_holonomy(&[g.clone(), g.inverse()]).dist(&SL2Elem::identity()) < 1e-14);
        assert!(total_holonomy(&diag4(2)).dist(&SL2Elem::diag(r(16.0))) < 1e-14);
    }

    #[test]
    fn unlink_with_trivial_total_holonomy_is_stabilized() {
        let g = SL2Elem::new(Matrix::from_real_rows(&[[2.0, 1.0], [1.0, 1.0]])).unwrap();
        let colors = vec![g.clone(), g.inverse()];
        assert_eq!(torsion(&w(2, &[]), &colors, false).unwrap_err(), Error::SingularTotalHolonomy);
        let rep = torsion_report(&w(2, &[]), &colors, true, 1e-9).unwrap();
        assert_eq!(rep.stabilizations, 1);
        assert!(rep.value.is_finite());
    }

    fn arb_colors(n: usize) -> impl Strategy<Value = Vec<SL2Elem>> {
        proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 6), n).prop_filter_map("inadmissible", |vs| {
            let chis: Vec<StarChar> = vs
                .iter()
                .map(|v| StarChar { kappa: c(1.2 + v[0] * 0.5, v[1] * 0.5), epsilon: c(v[2], v[3]), phi: c(v[4], v[5]) })
                .collect();
            let g = defactorize_tuple(&chis).ok()?;
            if crate::holonomy::admissibility_margin(&g) > 1e-3 { Some(g) } else { None }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn braid_relations_hold_for_every_variant(g in arb_colors(4), i in 1i32..3) {
            let lhs = w(4, &[i, i + 1, i]);
            let rhs = w(4, &[i + 1, i, i + 1]);
            for v in [Variant::Boundary, Variant::Reduced, Variant::Nice] {
                let (a, b) = match (burau(&lhs, &g, v), burau(&rhs, &g, v)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue, // an intermediate crossing left the admissible set
                };
                prop_assert!(a.matrix.dist(&b.matrix) < 1e-9 * (1.0 + a.matrix.max_abs()), "{:?}", v);
            }
        }

        #[test]
        fn nice_is_conjugate_to_reduced(g in arb_colors(4), letters in proptest::collection::vec((1i32..4, any::<bool>()), 1..4)) {
            let word = w(4, &letters.iter().map(|&(a, s)| if s { a } else { -a }).collect::<Vec<_>>());
            let red = burau_reduced(&word, &g).unwrap();
            let (Ok(src), Ok(tgt)) = (factorize_tuple(&red.source), factorize_tuple(&red.target)) else { return Ok(()) };
            let xs: Vec<ExtChar> = src.iter().map(|&chi| ExtChar { chi, mu: ONE }).collect();
            let Ok(nice) = burau_nice(&word, &xs) else { return Ok(()) };
            let conj = &(&nice_basis_change(&src) * &red.matrix) * &nice_basis_change(&tgt).inverse().unwrap();
            prop_assert!(nice.matrix.dist(&conj) < 1e-9 * (1.0 + nice.matrix.max_abs()));
        }

        #[test]
        fn boundary_and_reduced_torsions_agree(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cg = random_sl2(&mut rng);
            let t = c(1.5 + rand::Rng::gen_range(&mut rng, 0.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0));
            let colors = gauge_transform(&[SL2Elem::diag(t), SL2Elem::diag(t), SL2Elem::diag(t)], &cg);
            let word = w(3, &[1, -2, 1, -2]);
            let a = torsion(&word, &colors, false).unwrap();
            let b = torsion_boundary(&word, &colors).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() < 1e-8 * a.norm().max(1.0));
        }

        #[test]
        fn torsion_survives_markov_stabilization(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cg = random_sl2(&mut rng);
            let t = c(1.5 + rand::Rng::gen_range(&mut rng, 0.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0));
            let colors = gauge_transform(&[SL2Elem::diag(t), SL2Elem::diag(t)], &cg);
            let word = w(2, &[1, 1, 1]);
            let a = torsion(&word, &colors, false).unwrap();
            let mut stab = colors.clone();
            stab.push(colors[1].clone());
            let b = torsion(&w(3, &[1, 1, 1, 2]), &stab, false).unwrap();
            prop_assert!((a.norm() - b.norm()).abs() < 1e-8 * a.norm().max(1.0));
        }
    }
}
