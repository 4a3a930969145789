//! Truncated normed spaces `X_d = span{e_1, ..., e_d}`, their norms, the
//! coefficient pairing with functionals, and deterministic dual families.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, solve_tridiagonal};

/// Relative slack allowed when checking `dual norm <= 1`.
pub const DUAL_NORM_SLACK: f64 = 1e-12;

/// A member of a truncated space: `dim` finite coefficients against the
/// canonical basis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Element {
    coeffs: Vec<f64>,
}

impl Element {
    /// Wraps a coefficient vector. Rejects empty vectors and NaN/Inf entries.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("dim", "an element needs at least one coefficient"));
        }
        if let Some(index) = coeffs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { coeffs })
    }

    /// The origin of `X_dim`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self { coeffs: vec![0.0; dim] }
    }

    /// Canonical basis vector `e_n` (1-based) in `X_dim`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n == 0 || n > dim {
            return Err(Error::OutOfRange { index: n, horizon: dim });
        }
        let mut e = Self::zeros(dim);
        e.coeffs[n - 1] = 1.0;
        Ok(e)
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    /// Ambient truncation dimension.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficients against `e_1, ..., e_dim`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Consumes the element and returns its coefficients.
    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// True when every coefficient is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == 0.0)
    }

    /// Canonical embedding into a larger truncation (or truncation to a
    /// smaller one).
    pub fn padded(&self, dim: usize) -> Self {
        let mut coeffs = vec![0.0; dim.max(1)];
        for (c, x) in coeffs.iter_mut().zip(&self.coeffs) {
            *c = *x;
        }
        Self { coeffs }
    }

    /// `c * self`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// `self + c * other`, zero-padding the shorter operand.
    pub fn axpy(&self, c: f64, other: &Element) -> Self {
        let dim = self.dim().max(other.dim());
        let mut out = self.padded(dim);
        for (o, x) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += c * x;
        }
        out
    }

    /// `self - other`, zero-padding the shorter operand.
    pub fn sub(&self, other: &Element) -> Self {
        self.axpy(-1.0, other)
    }
}

/// A continuous linear functional on a truncation, stored by its coefficients
/// `<f, u> = sum_i f_i u_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Functional {
    coeffs: Vec<f64>,
    dual_norm: f64,
}

impl Functional {
    /// Functional with coefficients `coeffs`, its dual norm measured in `space`.
    pub fn measured(coeffs: Vec<f64>, space: &NormSpec) -> Result<Self> {
        if let Some(index) = coeffs.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let dual_norm = space.dual_norm_of(&coeffs)?;
        Ok(Self { coeffs, dual_norm })
    }

    /// Rescales `coeffs` by `1 / max(1, dual norm)` so the result lies in the
    /// closed dual unit ball of `space`.
    pub fn into_unit_ball(coeffs: Vec<f64>, space: &NormSpec) -> Result<Self> {
        let f = Self::measured(coeffs, space)?;
        if f.dual_norm <= 1.0 {
            return Ok(f);
        }
        let s = f.dual_norm;
        Ok(Self {
            coeffs: f.coeffs.iter().map(|c| c / s).collect(),
            dual_norm: 1.0,
        })
    }

    /// Coefficient vector.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Dual norm recorded at construction.
    pub fn dual_norm_bound(&self) -> f64 {
        self.dual_norm
    }

    /// `<self, u>`.
    pub fn pair(&self, u: &Element) -> f64 {
        pair(self, u)
    }
}

/// Duality pairing `<f, u>`: the coefficient dot product, the shorter operand
/// zero-padded.
pub fn pair(f: &Functional, u: &Element) -> f64 {
    linalg::dot(&f.coeffs, &u.coeffs)
}

/// Concrete norm kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `(sum |u_i|^p)^(1/p)`, `p = inf` for the max norm.
    Lp {
        /// Exponent, `>= 1` or infinite.
        p: f64,
    },
    /// `(sum w_i |u_i|^p)^(1/p)` (`max w_i |u_i|` for `p = inf`).
    WeightedLp {
        /// Exponent, `>= 1` or infinite.
        p: f64,
        /// Strictly positive weights; their count fixes the dimension.
        weights: Vec<f64>,
    },
    /// Discrete `H^1_0` norm on a uniform grid with spacing `h` and zero
    /// boundary values: `(sum h u_i^2 + sum h ((u_{i+1} - u_i)/h)^2)^(1/2)`.
    SobolevH1 {
        /// Grid spacing.
        h: f64,
    },
    /// Upper enclosure of a very weak norm with a fixed number of terms.
    VeryWeak(Box<VeryWeakNorm>),
}

/// A norm on truncated elements together with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpec {
    kind: NormKind,
    label: String,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid("p", format!("exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn fmt_p(p: f64) -> String {
    if p.is_infinite() {
        String::from("inf")
    } else {
        format!("{p}")
    }
}

impl NormSpec {
    /// `l^p` norm.
    pub fn lp(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            kind: NormKind::Lp { p },
            label: format!("l^{}", fmt_p(p)),
        })
    }

    /// Euclidean norm.
    pub fn l2() -> Self {
        Self::lp(2.0).expect("p = 2 is valid")
    }

    /// Weighted `l^p` norm.
    pub fn weighted_lp(p: f64, weights: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        if weights.is_empty() {
            return Err(invalid("weights", "at least one weight is required"));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("weights", format!("weight {i} is not strictly positive")));
        }
        Ok(Self {
            label: format!("weighted-l^{}", fmt_p(p)),
            kind: NormKind::WeightedLp { p, weights },
        })
    }

    /// Discrete Sobolev `H^1_0` norm with grid spacing `h`.
    pub fn sobolev_h1(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("h", format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self {
            kind: NormKind::SobolevH1 { h },
            label: format!("h1(h={h})"),
        })
    }

    /// Very weak norm of `family`, evaluated as the genuine norm
    /// `sum_{k<=M} 2^-k |<phi_k,u>| + 2^-M ||u||`, an upper enclosure of
    /// `|u|_Phi` whose width is at most `tolerance * ||u||`.
    pub fn very_weak(family: DualFamily, tolerance: f64) -> Result<Self> {
        let norm = VeryWeakNorm::new(family, tolerance)?;
        Ok(Self {
            label: format!("very-weak({})", norm.family.mode.label()),
            kind: NormKind::VeryWeak(Box::new(norm)),
        })
    }

    /// Replaces the display label.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Display label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Norm kind.
    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Short name of the kind.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            NormKind::Lp { .. } => "lp",
            NormKind::WeightedLp { .. } => "weighted-lp",
            NormKind::SobolevH1 { .. } => "sobolev-h1",
            NormKind::VeryWeak(_) => "very-weak",
        }
    }

    /// Dimension forced by the configuration, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match &self.kind {
            NormKind::WeightedLp { weights, .. } => Some(weights.len()),
            _ => None,
        }
    }

    /// Checks that elements of dimension `dim` can be measured.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match &self.kind {
            NormKind::WeightedLp { weights, .. } if weights.len() != dim => Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: dim,
            }),
            NormKind::VeryWeak(vw) if dim > vw.family.dim => Err(Error::DimensionMismatch {
                expected: vw.family.dim,
                found: dim,
            }),
            _ if dim == 0 => Err(invalid("dim", "dimension must be positive")),
            _ => Ok(()),
        }
    }

    /// `||u||` for this norm.
    pub fn norm(&self, u: &Element) -> Result<f64> {
        self.check_dim(u.dim())?;
        Ok(self.eval(u.coeffs()))
    }

    /// Norm of a raw coefficient slice whose length already passed
    /// [`check_dim`](Self::check_dim).
    pub fn eval(&self, u: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lp { p } => lp_value(u, *p, None),
            NormKind::WeightedLp { p, weights } => lp_value(u, *p, Some(weights)),
            NormKind::SobolevH1 { h } => libm::sqrt(sobolev_quadratic(u, *h)),
            NormKind::VeryWeak(vw) => vw.upper(u),
        }
    }

    /// Lower and upper bounds on the value of the norm being modelled at `u`.
    /// Degenerate for every kind except very weak norms.
    pub fn bracket(&self, u: &[f64]) -> (f64, f64) {
        match &self.kind {
            NormKind::VeryWeak(vw) => vw.bracket(u),
            _ => {
                let v = self.eval(u);
                (v, v)
            }
        }
    }

    /// A subgradient of the norm at `u`, written into `out`.
    pub fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        match &self.kind {
            NormKind::Lp { p } => lp_gradient(u, *p, None, out),
            NormKind::WeightedLp { p, weights } => lp_gradient(u, *p, Some(weights), out),
            NormKind::SobolevH1 { h } => {
                let n = libm::sqrt(sobolev_quadratic(u, *h));
                if n == 0.0 {
                    return;
                }
                let d = u.len();
                for i in 0..d {
                    let left = if i > 0 { u[i - 1] } else { 0.0 };
                    let right = if i + 1 < d { u[i + 1] } else { 0.0 };
                    out[i] = (h * u[i] + (2.0 * u[i] - left - right) / h) / n;
                }
            }
            NormKind::VeryWeak(vw) => vw.upper_subgradient(u, out),
        }
    }

    /// Dual norm of `f`: the operator norm of `u -> <f, u>` over the unit ball
    /// of this norm.
    pub fn dual_norm(&self, f: &Functional) -> Result<f64> {
        self.dual_norm_of(f.coeffs())
    }

    /// Dual norm of `f - g`.
    pub fn dual_distance(&self, f: &Functional, g: &Functional) -> Result<f64> {
        let n = f.coeffs.len().max(g.coeffs.len());
        let diff: Vec<f64> = (0..n)
            .map(|i| f.coeffs.get(i).copied().unwrap_or(0.0) - g.coeffs.get(i).copied().unwrap_or(0.0))
            .collect();
        self.dual_norm_of(&diff)
    }

    pub(crate) fn dual_norm_of(&self, f: &[f64]) -> Result<f64> {
        match &self.kind {
            NormKind::Lp { p } => Ok(lp_value(f, conjugate(*p), None)),
            NormKind::WeightedLp { p, weights } => {
                if f.len() > weights.len() {
                    return Err(Error::DimensionMismatch {
                        expected: weights.len(),
                        found: f.len(),
                    });
                }
                // v_i = w_i^(1/p) u_i turns the norm into plain l^p.
                let scaled: Vec<f64> = f
                    .iter()
                    .zip(weights)
                    .map(|(fi, w)| {
                        if p.is_infinite() {
                            fi / w
                        } else {
                            fi / libm::pow(*w, 1.0 / p)
                        }
                    })
                    .collect();
                Ok(lp_value(&scaled, conjugate(*p), None))
            }
            NormKind::SobolevH1 { h } => {
                // Riesz map: the dual norm is sqrt(f^T A^-1 f) with
                // A = h I + K / h and K the Dirichlet stiffness stencil.
                let d = f.len();
                if d == 0 {
                    return Ok(0.0);
                }
                let off = vec![-1.0 / h; d - 1];
                let diag = vec![h + 2.0 / h; d];
                let x = solve_tridiagonal(&off, &diag, &off, f);
                Ok(libm::sqrt(linalg::dot(f, &x).max(0.0)))
            }
            NormKind::VeryWeak(_) => Err(Error::UnsupportedNorm {
                operation: "dual_norm",
                kind: "very-weak",
            }),
        }
    }

    /// `||e_i||` for `i` in `1..=dim`.
    pub(crate) fn basis_norms(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                self.eval(&e)
            })
            .collect()
    }
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp_value(u: &[f64], p: f64, weights: Option<&[f64]>) -> f64 {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    if p.is_infinite() {
        return u
            .iter()
            .enumerate()
            .map(|(i, x)| w(i) * libm::fabs(*x))
            .fold(0.0, f64::max);
    }
    if p == 2.0 {
        return libm::sqrt(u.iter().enumerate().map(|(i, x)| w(i) * x * x).sum::<f64>());
    }
    if p == 1.0 {
        return u.iter().enumerate().map(|(i, x)| w(i) * libm::fabs(*x)).sum();
    }
    let m = u.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = u
        .iter()
        .enumerate()
        .map(|(i, x)| w(i) * libm::pow(libm::fabs(*x) / m, p))
        .sum();
    m * libm::pow(s, 1.0 / p)
}

fn lp_gradient(u: &[f64], p: f64, weights: Option<&[f64]>, out: &mut [f64]) {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sign = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    if p.is_infinite() {
        let best = u
            .iter()
            .enumerate()
            .map(|(i, x)| (i, w(i) * libm::fabs(*x)))
            .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best.1 > 0.0 {
            out[best.0] = w(best.0) * sign(u[best.0]);
        }
        return;
    }
    if p == 1.0 {
        for (i, (o, x)) in out.iter_mut().zip(u).enumerate() {
            *o = w(i) * sign(*x);
        }
        return;
    }
    let n = lp_value(u, p, weights);
    if n == 0.0 {
        return;
    }
    for (i, (o, x)) in out.iter_mut().zip(u).enumerate() {
        *o = w(i) * sign(*x) * libm::pow(libm::fabs(*x) / n, p - 1.0);
    }
}

fn sobolev_quadratic(u: &[f64], h: f64) -> f64 {
    let mass: f64 = u.iter().map(|x| x * x).sum();
    let mut stiff = 0.0;
    let mut prev = 0.0;
    for &x in u.iter().chain(core::iter::once(&0.0)) {
        let d = x - prev;
        stiff += d * d;
        prev = x;
    }
    h * mass + stiff / h
}

/// How a [`DualFamily`] enumerates its functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FamilyMode {
    /// `phi_k = e_k^* / ||e_k^*||_*` for `k <= dim`, zero beyond the
    /// truncation. Not dense in the dual ball, but it already detects weak
    /// convergence of bounded sequences in `l^p`, `1 < p < inf`, and makes
    /// `|u|_Phi` closed-form.
    Coordinate,
    /// Diagonal enumeration of dyadic-rational coefficient vectors, dense in
    /// the dual unit ball of the truncation.
    DenseRational,
}

impl FamilyMode {
    /// Kebab-case name.
    pub fn label(self) -> &'static str {
        match self {
            FamilyMode::Coordinate => "coordinate",
            FamilyMode::DenseRational => "dense-rational",
        }
    }
}

/// Deterministic enumerator `k -> phi_k` of functionals in the closed dual
/// unit ball of a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFamily {
    mode: FamilyMode,
    space: NormSpec,
    dim: usize,
    basis_norms: Vec<f64>,
}

impl DualFamily {
    /// Family over `X_dim` normed by `space`.
    pub fn new(mode: FamilyMode, space: NormSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        if let NormKind::VeryWeak(_) = space.kind {
            return Err(Error::UnsupportedNorm {
                operation: "dual family",
                kind: "very-weak",
            });
        }
        space.check_dim(dim)?;
        let basis_norms = space.basis_norms(dim);
        Ok(Self {
            mode,
            space,
            dim,
            basis_norms,
        })
    }

    /// Coordinate family over `l^2` in dimension `dim`.
    pub fn coordinate_l2(dim: usize) -> Result<Self> {
        Self::new(FamilyMode::Coordinate, NormSpec::l2(), dim)
    }

    /// Dense-rational family over `l^2` in dimension `dim`.
    pub fn dense_l2(dim: usize) -> Result<Self> {
        Self::new(FamilyMode::DenseRational, NormSpec::l2(), dim)
    }

    /// Enumeration mode.
    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    /// Strong norm whose dual ball the family lives in.
    pub fn space(&self) -> &NormSpec {
        &self.space
    }

    /// Truncation dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family on a different truncation.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.mode, self.space.clone(), dim)
    }

    /// The `k`-th functional, `k >= 1`.
    pub fn enumerate(&self, k: usize) -> Result<Functional> {
        if k == 0 {
            return Err(invalid("k", "enumeration starts at k = 1"));
        }
        match self.mode {
            FamilyMode::Coordinate => {
                let mut coeffs = vec![0.0; self.dim];
                if k > self.dim {
                    return Ok(Functional { coeffs, dual_norm: 0.0 });
                }
                coeffs[k - 1] = 1.0;
                let f = Functional::measured(coeffs, &self.space)?;
                let s = f.dual_norm;
                Ok(Functional {
                    coeffs: f.coeffs.iter().map(|c| c / s).collect(),
                    dual_norm: 1.0,
                })
            }
            FamilyMode::DenseRational => {
                let raw = dyadic_tuple(self.dim, k);
                let mut coeffs = vec![0.0; self.dim];
                let unit = libm::ldexp(1.0, -(raw.level as i32));
                for (i, n) in raw.numerators.iter().enumerate() {
                    coeffs[i] = *n as f64 * unit * self.basis_norms[i];
                }
                Functional::into_unit_ball(coeffs, &self.space)
            }
        }
    }

    /// `phi_1, ..., phi_m`.
    pub fn prefix(&self, m: usize) -> Result<Vec<Functional>> {
        (1..=m).map(|k| self.enumerate(k)).collect()
    }

    /// Infinite iterator over `phi_1, phi_2, ...`.
    pub fn iter(&self) -> impl Iterator<Item = Functional> + '_ {
        (1..).map(move |k| self.enumerate(k).expect("k >= 1 and family validated"))
    }
}

/// Raw dyadic tuple behind the `k`-th dense-rational functional: coefficient
/// `i` equals `numerators[i] / 2^level` (before basis scaling and dual
/// normalization).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicTuple {
    /// Support length `s`; the last numerator is nonzero.
    pub numerators: Vec<i64>,
    /// Dyadic level `l`.
    pub level: u32,
}

/// Unranks the `k`-th tuple (1-based) of the dense-rational enumeration over
/// `dim` coordinates.
///
/// Blocks are visited along diagonals `t = s + l = 1, 2, ...`, with support
/// length `s = 1..=min(t, dim)` inside a diagonal. Block `(s, l)` lists all
/// tuples with numerators in `-2^l..=2^l` and nonzero last entry, in
/// little-endian order over the zigzag digit sequence `0, 1, -1, 2, -2, ...`.
pub fn dyadic_tuple(dim: usize, k: usize) -> DyadicTuple {
    assert!(k >= 1 && dim >= 1);
    let mut rank = (k - 1) as u128;
    let mut t: u32 = 1;
    loop {
        for s in 1..=(t as usize).min(dim) {
            let level = t - s as u32;
            let g = block_radix(level);
            let size = (g - 1).saturating_mul(sat_pow(g, s as u32 - 1));
            if rank < size {
                let mut numerators = Vec::with_capacity(s);
                for _ in 0..s - 1 {
                    numerators.push(zigzag((rank % g) as u64));
                    rank /= g;
                }
                numerators.push(zigzag(rank as u64 + 1));
                return DyadicTuple { numerators, level };
            }
            rank -= size;
        }
        t += 1;
    }
}

fn block_radix(level: u32) -> u128 {
    // 2^(l+1) + 1 digits per coordinate.
    1u128.checked_shl(level + 1).map_or(u128::MAX, |v| v.saturating_add(1))
}

fn sat_pow(base: u128, exp: u32) -> u128 {
    base.checked_pow(exp).unwrap_or(u128::MAX)
}

fn zigzag(idx: u64) -> i64 {
    if idx == 0 {
        0
    } else if idx % 2 == 1 {
        idx.div_ceil(2) as i64
    } else {
        -((idx / 2) as i64)
    }
}

/// Fixed-length evaluation of a very weak norm: the first `terms` functionals
/// of a family, prepared once.
#[derive(Debug, Clone, PartialEq)]
pub struct VeryWeakNorm {
    family: DualFamily,
    tolerance: f64,
    terms: usize,
    functionals: Vec<Functional>,
}

impl VeryWeakNorm {
    /// Prepares `M = max(1, ceil(log2(1/tolerance)))` terms so that the
    /// enclosure width is at most `tolerance * ||u||`.
    pub fn new(family: DualFamily, tolerance: f64) -> Result<Self> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(invalid("tolerance", format!("must be positive, got {tolerance}")));
        }
        let terms = (libm::ceil(-libm::log2(tolerance)).max(1.0) as usize).min(1074);
        let functionals = family.prefix(terms)?;
        Ok(Self {
            family,
            tolerance,
            terms,
            functionals,
        })
    }

    /// Underlying dual family.
    pub fn family(&self) -> &DualFamily {
        &self.family
    }

    /// Requested relative tolerance.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of series terms evaluated.
    pub fn terms(&self) -> usize {
        self.terms
    }

    fn partial(&self, u: &[f64]) -> f64 {
        self.functionals
            .iter()
            .enumerate()
            .map(|(i, f)| libm::ldexp(libm::fabs(linalg::dot(&f.coeffs, u)), -(i as i32 + 1)))
            .sum()
    }

    fn tail(&self, u: &[f64]) -> f64 {
        libm::ldexp(self.family.space.eval_padded(u, self.family.dim), -(self.terms as i32))
    }

    /// `(lo, hi)` with `lo` the partial sum and `hi = lo + 2^-M ||u||`.
    pub fn bracket(&self, u: &[f64]) -> (f64, f64) {
        let lo = self.partial(u);
        (lo, lo + self.tail(u))
    }

    fn upper(&self, u: &[f64]) -> f64 {
        self.partial(u) + self.tail(u)
    }

    fn upper_subgradient(&self, u: &[f64], out: &mut [f64]) {
        for (i, f) in self.functionals.iter().enumerate() {
            let s = linalg::dot(&f.coeffs, u);
            if s == 0.0 {
                continue;
            }
            let w = libm::copysign(libm::ldexp(1.0, -(i as i32 + 1)), s);
            for (o, c) in out.iter_mut().zip(&f.coeffs) {
                *o += w * c;
            }
        }
        let mut g = vec![0.0; self.family.dim];
        let padded = pad(u, self.family.dim);
        self.family.space.subgradient(&padded, &mut g);
        let w = libm::ldexp(1.0, -(self.terms as i32));
        for (o, gi) in out.iter_mut().zip(&g) {
            *o += w * gi;
        }
    }
}

fn pad(u: &[f64], dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim.max(u.len())];
    v[..u.len()].copy_from_slice(u);
    v
}

impl NormSpec {
    /// Strong norm of `u` embedded in `X_dim` (weighted norms need the
    /// configured dimension).
    pub(crate) fn eval_padded(&self, u: &[f64], dim: usize) -> f64 {
        if u.len() == dim {
            self.eval(u)
        } else {
            self.eval(&pad(u, dim))
        }
    }
}
