//! JSON input format for colored links.

use serde::{Deserialize, Serialize};

use crate::braids::BraidWord;
use crate::error::{Error, Result};
use crate::holonomy::{defactorize_tuple, SL2Elem, StarChar};
use crate::invariants::{Link, Options};
use crate::numerics::{Matrix, C64};

/// A complex number written either as a bare real or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Real(f64),
    Complex([f64; 2]),
}

impl Num {
    pub fn value(self) -> C64 {
        match self {
            Num::Real(x) => C64::new(x, 0.0),
            Num::Complex([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for Num {
    fn from(z: C64) -> Self {
        Num::Complex([z.re, z.im])
    }
}

/// A color given as an SL₂(ℂ) matrix (rows) or in SL₂(ℂ)* coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColorSpec {
    Matrix([[Num; 2]; 2]),
    Star { kappa: Num, epsilon: Num, phi: Num },
}

/// Input record for `compute` and `burau`.
///
/// Colors are either all matrices or all SL₂(ℂ)* triples; in the second case
/// they are the factorized tuple and are converted back with the partial
/// products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub strands: usize,
    pub word: Vec<i32>,
    pub colors: Vec<ColorSpec>,
    /// One fractional eigenvalue per closure component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Num>>,
    #[serde(default)]
    pub options: Options,
}

impl LinkSpec {
    /// Validate and convert into the numeric form used by the library.
    pub fn to_link(&self) -> Result<Link> {
        let word = BraidWord::new(self.strands, self.word.clone())?;
        if self.colors.len() != self.strands {
            return Err(Error::Dimension(format!("{} colors for {} strands", self.colors.len(), self.strands)));
        }
        let colors = self.sl2_colors()?;
        let mu = self.mu.as_ref().map(|m| m.iter().map(|z| z.value()).collect());
        Ok(Link { word, colors, mu, options: self.options })
    }

    fn sl2_colors(&self) -> Result<Vec<SL2Elem>> {
        let all_matrices = self.colors.iter().all(|c| matches!(c, ColorSpec::Matrix(_)));
        let all_star = self.colors.iter().all(|c| matches!(c, ColorSpec::Star { .. }));
        if all_matrices {
            self.colors
                .iter()
                .map(|c| match c {
                    ColorSpec::Matrix(rows) => {
                        SL2Elem::new(Matrix::from_rows(&[[rows[0][0].value(), rows[0][1].value()], [rows[1][0].value(), rows[1][1].value()]]))
                    }
                    ColorSpec::Star { .. } => unreachable!(),
                })
                .collect()
        } else if all_star {
            let stars = self
                .colors
                .iter()
                .map(|c| match c {
                    ColorSpec::Star { kappa, epsilon, phi } => StarChar::new(kappa.value(), epsilon.value(), phi.value()),
                    ColorSpec::Matrix(_) => unreachable!(),
                })
                .collect::<Result<Vec<_>>>()?;
            defactorize_tuple(&stars)
        } else {
            Err(Error::Dimension("colors mix matrix and SL2* forms".into()))
        }
    }

    /// The spec of a link with matrix colors.
    pub fn from_link(link: &Link) -> Self {
        let colors = link
            .colors
            .iter()
            .map(|g| ColorSpec::Matrix([[g.get(0, 0).into(), g.get(0, 1).into()], [g.get(1, 0).into(), g.get(1, 1).into()]]))
            .collect();
        LinkSpec {
            name: None,
            strands: link.word.strands(),
            word: link.word.letters().to_vec(),
            colors,
            mu: link.mu.as_ref().map(|m| m.iter().map(|&z| z.into()).collect()),
            options: link.options,
        }
    }
}

/// A single spec or a batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input {
    Batch(Vec<LinkSpec>),
    Single(Box<LinkSpec>),
}
