//! The very weak norm `|u|_Phi = sum_{k>=1} 2^-k |<phi_k, u>|`, evaluated as a
//! certified enclosure, and the metric it induces.
//!
//! Every `phi_k` has dual norm at most one, so `|<phi_k, u>| <= ||u||` and the
//! tail after `M` terms is at most `2^-M ||u||` uniformly on balls. That bound
//! fixes the number of terms and closes the interval.

use core::cmp::Ordering;

use crate::error::{invalid, Result};
use crate::linalg;
use crate::spaces::{DualFamily, Element};

/// Interval `[lo, hi]` bracketing the value of an infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertifiedValue {
    /// Lower bound (the partial sum).
    pub lo: f64,
    /// Upper bound (partial sum plus tail majorant).
    pub hi: f64,
    /// Number of series terms summed.
    pub terms_used: usize,
}

/// Outcome of a conservative comparison of two enclosures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// Every point of the left interval is below every point of the right.
    Less,
    /// Every point of the left interval is above every point of the right.
    Greater,
    /// The intervals overlap; no ordering can be certified.
    Ambiguous,
}

impl CertifiedValue {
    /// Degenerate interval `[v, v]`.
    pub fn exact(v: f64) -> Self {
        Self {
            lo: v,
            hi: v,
            terms_used: 0,
        }
    }

    /// Interval width.
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint.
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// True when `x` lies in `[lo, hi]`.
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Conservative comparison: `a < b` only if `a.hi < b.lo`.
    pub fn compare(&self, other: &CertifiedValue) -> Comparison {
        if self.hi < other.lo {
            Comparison::Less
        } else if self.lo > other.hi {
            Comparison::Greater
        } else {
            Comparison::Ambiguous
        }
    }

    /// Conservative comparison against a point value.
    pub fn compare_point(&self, x: f64) -> Comparison {
        self.compare(&CertifiedValue::exact(x))
    }

    /// `Some(ordering)` when [`compare`](Self::compare) is decisive.
    pub fn partial_order(&self, other: &CertifiedValue) -> Option<Ordering> {
        match self.compare(other) {
            Comparison::Less => Some(Ordering::Less),
            Comparison::Greater => Some(Ordering::Greater),
            Comparison::Ambiguous => None,
        }
    }
}

/// Uniform majorant `2^-M R` of the tail `sum_{k>M} 2^-k |<phi_k, u>|` over
/// the ball `||u|| <= R`.
pub fn tail_bound(terms: usize, radius: f64) -> f64 {
    debug_assert!(terms >= 1 && radius >= 0.0);
    libm::ldexp(radius, -(terms.min(i32::MAX as usize) as i32))
}

/// Least `M >= 1` with `2^-M R <= tol`.
pub fn terms_for(radius: f64, tol: f64) -> usize {
    if radius <= tol {
        return 1;
    }
    let mut m = libm::ceil(libm::log2(radius / tol)).max(1.0) as usize;
    // log2 may round either way; settle on the exact least M.
    while m > 1 && tail_bound(m - 1, radius) <= tol {
        m -= 1;
    }
    while tail_bound(m, radius) > tol {
        m += 1;
    }
    m
}

/// Certified enclosure of `|u|_Phi`: `lo` is the partial sum over the first
/// `M` functionals and `hi = lo + 2^-M ||u||`, with `M` the least integer
/// making the tail majorant at most `tol`.
pub fn very_weak_norm(fam: &DualFamily, u: &Element, tol: f64) -> Result<CertifiedValue> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("tol", "tolerance must be positive"));
    }
    fam.space().check_dim(fam.dim())?;
    if u.dim() > fam.dim() {
        return Err(crate::Error::DimensionMismatch {
            expected: fam.dim(),
            found: u.dim(),
        });
    }
    let radius = fam.space().eval_padded(u.coeffs(), fam.dim());
    let terms = terms_for(radius, tol);
    if radius == 0.0 {
        return Ok(CertifiedValue {
            lo: 0.0,
            hi: 0.0,
            terms_used: terms,
        });
    }
    let lo: f64 = fam
        .iter()
        .take(terms)
        .enumerate()
        .map(|(i, phi)| libm::ldexp(libm::fabs(linalg::dot(phi.coeffs(), u.coeffs())), -(i as i32 + 1)))
        .sum();
    Ok(CertifiedValue {
        lo,
        hi: lo + tail_bound(terms, radius),
        terms_used: terms,
    })
}

/// The induced metric `|u - v|_Phi`.
pub fn very_weak_distance(fam: &DualFamily, u: &Element, v: &Element, tol: f64) -> Result<CertifiedValue> {
    very_weak_norm(fam, &u.sub(v), tol)
}
