//! Braid words and their actions.
//!
//! Braids compose left to right: the word `1 2` means first `σ₁`, then `σ₂`.
//! A positive letter `i` acts on a tuple `(…, g_i, g_{i+1}, …)` by
//! `(g_i⁻¹ g_{i+1} g_i, g_i)` in positions `i, i+1`; free-group generators
//! transform by the same rule. The color `g_i` is the holonomy of the
//! positively oriented meridian around strand `i` at the bottom of the braid.

use std::fmt;

use crate::error::{Error, Result};
use crate::holonomy::SL2Elem;

/// A braid on `strands` strands, given as signed generator indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BraidWord {
    strands: usize,
    letters: Vec<i32>,
}

impl BraidWord {
    pub fn new(strands: usize, letters: Vec<i32>) -> Result<Self> {
        if strands == 0 {
            return Err(Error::InvalidBraid("a braid needs at least one strand".into()));
        }
        for (pos, &l) in letters.iter().enumerate() {
            let a = l.unsigned_abs() as usize;
            if l == 0 || a >= strands {
                return Err(Error::InvalidBraid(format!(
                    "letter {l} at position {pos} is outside 1..={} (up to sign)",
                    strands - 1
                )));
            }
        }
        Ok(BraidWord { strands, letters })
    }

    pub fn identity(strands: usize) -> Result<Self> {
        BraidWord::new(strands, Vec::new())
    }

    /// Parse whitespace-separated signed integers, e.g. `"1 -2 1 -2"`.
    pub fn parse(strands: usize, text: &str) -> Result<Self> {
        let letters = text
            .split_whitespace()
            .map(|t| t.parse::<i32>().map_err(|_| Error::InvalidBraid(format!("cannot parse letter {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        BraidWord::new(strands, letters)
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &BraidWord) -> Result<BraidWord> {
        if self.strands != other.strands {
            return Err(Error::InvalidBraid("cannot compose braids on different strand counts".into()));
        }
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        BraidWord::new(self.strands, letters)
    }

    /// Group inverse: reversed word with negated letters.
    pub fn inverse(&self) -> BraidWord {
        BraidWord { strands: self.strands, letters: self.letters.iter().rev().map(|l| -l).collect() }
    }

    /// The full twist `(σ₁⋯σ_{n-1})^n`.
    pub fn full_twist(strands: usize) -> Result<BraidWord> {
        let row: Vec<i32> = (1..strands as i32).collect();
        BraidWord::new(strands, row.repeat(strands))
    }

    /// Image under the mirror functor on colored braids: the order of the
    /// strands is reversed and every crossing changes sign, so `σ_i` becomes
    /// `σ_{n-i}⁻¹`.
    pub fn mirror(&self) -> BraidWord {
        let n = self.strands as i32;
        BraidWord {
            strands: self.strands,
            letters: self.letters.iter().map(|&l| -l.signum() * (n - l.abs())).collect(),
        }
    }

    /// Position `p` (0-based) ends at `perm[p]` after the braid.
    pub fn permutation(&self) -> Vec<usize> {
        // track which strand sits at each position
        let mut at: Vec<usize> = (0..self.strands).collect();
        for &l in &self.letters {
            let i = l.unsigned_abs() as usize - 1;
            at.swap(i, i + 1);
        }
        let mut perm = vec![0; self.strands];
        for (pos, &strand) in at.iter().enumerate() {
            perm[strand] = pos;
        }
        perm
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "[{} strands] {}", self.strands, body.join(" "))
    }
}

/// A freely reduced word in the generators `x_1, …, x_n`, stored as
/// `(index, ±1)` pairs with 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FreeWord(pub Vec<(usize, i32)>);

impl FreeWord {
    pub fn generator(i: usize) -> Self {
        FreeWord(vec![(i, 1)])
    }

    pub fn inverse(&self) -> Self {
        FreeWord(self.0.iter().rev().map(|&(i, e)| (i, -e)).collect())
    }

    /// Concatenate and freely reduce.
    pub fn mul(&self, other: &FreeWord) -> Self {
        let mut out = self.0.clone();
        for &t in &other.0 {
            match out.last() {
                Some(&(i, e)) if i == t.0 && e == -t.1 => {
                    out.pop();
                }
                _ => out.push(t),
            }
        }
        FreeWord(out)
    }

    /// Evaluate under `x_i ↦ colors[i-1]`.
    pub fn eval(&self, colors: &[SL2Elem]) -> SL2Elem {
        self.0.iter().fold(SL2Elem::identity(), |acc, &(i, e)| {
            let g = &colors[i - 1];
            if e > 0 { acc.mul(g) } else { acc.mul(&g.inverse()) }
        })
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &(i, e) in &self.0 {
            if e > 0 { write!(f, "x{i}")? } else { write!(f, "x{i}^-1")? }
        }
        Ok(())
    }
}

/// The images `(x₁·β, …, xₙ·β)` of the free generators.
pub fn act_free(word: &BraidWord) -> Vec<FreeWord> {
    let mut xs: Vec<FreeWord> = (1..=word.strands).map(FreeWord::generator).collect();
    for &l in &word.letters {
        let i = l.unsigned_abs() as usize - 1;
        let (a, b) = (xs[i].clone(), xs[i + 1].clone());
        if l > 0 {
            xs[i] = a.inverse().mul(&b).mul(&a);
            xs[i + 1] = a;
        } else {
            xs[i] = b.clone();
            xs[i + 1] = b.mul(&a).mul(&b.inverse());
        }
    }
    xs
}

/// Apply one letter to a color tuple in place.
pub(crate) fn act_letter_sl2(letter: i32, colors: &mut [SL2Elem]) {
    let i = letter.unsigned_abs() as usize - 1;
    let (a, b) = (colors[i].clone(), colors[i + 1].clone());
    if letter > 0 {
        colors[i] = a.inverse().mul(&b).mul(&a);
        colors[i + 1] = a;
    } else {
        colors[i] = b.clone();
        colors[i + 1] = b.mul(&a).mul(&b.inverse());
    }
}

/// Transport a tuple of SL₂(ℂ) colors along the braid.
pub fn act_colors_sl2(word: &BraidWord, colors: &[SL2Elem]) -> Result<Vec<SL2Elem>> {
    check_len(word, colors.len())?;
    let mut out = colors.to_vec();
    for &l in &word.letters {
        act_letter_sl2(l, &mut out);
    }
    Ok(out)
}

pub(crate) fn check_len(word: &BraidWord, len: usize) -> Result<()> {
    if len != word.strands {
        return Err(Error::Dimension(format!("{len} colors for a braid on {} strands", word.strands)));
    }
    Ok(())
}

/// Link components of the closure as cycles of the strand permutation,
/// 1-based and ordered by least strand index.
pub fn closure_components(word: &BraidWord) -> Vec<Vec<usize>> {
    let perm = word.permutation();
    let mut seen = vec![false; word.strands];
    let mut comps = Vec::new();
    for start in 0..word.strands {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut p = start;
        while !seen[p] {
            seen[p] = true;
            cyc.push(p + 1);
            p = perm[p];
        }
        cyc.sort_unstable();
        comps.push(cyc);
    }
    comps
}

/// Component index (0-based) of every strand.
pub fn component_of_strand(word: &BraidWord) -> Vec<usize> {
    let mut out = vec![0; word.strands];
    for (k, comp) in closure_components(word).iter().enumerate() {
        for &s in comp {
            out[s - 1] = k;
        }
    }
    out
}

/// Sum of the crossing signs.
pub fn writhe(word: &BraidWord) -> i64 {
    word.letters.iter().map(|&l| l.signum() as i64).sum()
}

/// Ordered product `g_n ⋯ g_1`.
pub fn total_holonomy(colors: &[SL2Elem]) -> SL2Elem {
    colors.iter().fold(SL2Elem::identity(), |acc, g| g.mul(&acc))
}

/// Outcome of [`stabilize_nonsingular`].
#[derive(Clone, Debug)]
pub struct Stabilized {
    pub word: BraidWord,
    pub colors: Vec<SL2Elem>,
    /// Number of Markov stabilizations appended (0, 1 or 2).
    pub added: usize,
}

/// Append positive Markov stabilizations until the total holonomy has trace
/// different from 2. Each stabilization adds a strand carrying a copy of the
/// last color. Because `tr(g²h) + tr(h) = tr(g) tr(gh)`, if both `h` and `gh`
/// have trace 2 then `g²h` has trace `2 tr(g) − 2 ≠ 2`, so two steps suffice.
pub fn stabilize_nonsingular(word: &BraidWord, colors: &[SL2Elem], tol: f64) -> Result<Stabilized> {
    check_len(word, colors.len())?;
    for (index, g) in colors.iter().enumerate() {
        if (g.trace() - 2.0).norm() <= tol {
            return Err(Error::SingularMeridian { index });
        }
    }
    let mut word = word.clone();
    let mut colors = colors.to_vec();
    let mut added = 0;
    while (total_holonomy(&colors).trace() - 2.0).norm() <= tol {
        if added == 2 {
            return Err(Error::SingularTotalHolonomy);
        }
        let n = word.strands;
        let mut letters = word.letters.clone();
        letters.push(n as i32);
        word = BraidWord::new(n + 1, letters)?;
        let last = colors[n - 1].clone();
        colors.push(last);
        added += 1;
    }
    Ok(Stabilized { word, colors, added })
}
