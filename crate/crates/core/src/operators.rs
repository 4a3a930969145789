//! Linear operators `T: X -> Y` between truncations, with a metadata label for
//! their complete-continuity status.
//!
//! The label is set by constructor rules and is never read by certification
//! code; certificates and witnesses are computed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix};
use crate::spaces::{Element, NormKind, NormSpec};

/// Complete-continuity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CcStatus {
    /// Maps weakly convergent sequences to strongly convergent ones.
    CompletelyContinuous,
    /// Known counterexample behaviour (isometric part).
    NotCompletelyContinuous,
    /// No rule applied.
    Unknown,
}

/// Storage of the linear action.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorRepr {
    /// `(Tu)_k = lambda_k u_k`.
    Diagonal(Vec<f64>),
    /// `Tu = A u`.
    Dense(Matrix),
    /// `(Tu)_i = h sum_j K(x_i, y_j) u_j`, samples stored row-major by `i`.
    Kernel {
        /// Grid samples of the kernel.
        samples: Matrix,
        /// Quadrature weight (grid spacing).
        h: f64,
    },
    /// Right shift `(Tu)_1 = 0, (Tu)_{k+1} = u_k` into one more coordinate.
    Shift,
}

/// A linear operator with normed domain and codomain truncations.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    repr: OperatorRepr,
    domain: NormSpec,
    codomain: NormSpec,
    domain_dim: usize,
    codomain_dim: usize,
    cc_status: CcStatus,
    label: String,
}

impl LinearOperator {
    fn build(
        repr: OperatorRepr,
        domain: NormSpec,
        codomain: NormSpec,
        domain_dim: usize,
        codomain_dim: usize,
        cc_status: CcStatus,
        label: String,
    ) -> Result<Self> {
        if domain_dim == 0 || codomain_dim == 0 {
            return Err(invalid("dim", "operators need positive dimensions"));
        }
        domain.check_dim(domain_dim)?;
        codomain.check_dim(codomain_dim)?;
        Ok(Self {
            repr,
            domain,
            codomain,
            domain_dim,
            codomain_dim,
            cc_status,
            label,
        })
    }

    /// Diagonal operator. Labelled completely continuous when the tail of
    /// `|lambda_k|` decreases towards zero (or vanishes: finite rank), not
    /// completely continuous when it is a nonzero constant.
    pub fn diagonal(lambda: Vec<f64>, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        if let Some(index) = lambda.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let d = lambda.len();
        let status = diagonal_status(&lambda);
        Self::build(
            OperatorRepr::Diagonal(lambda),
            domain,
            codomain,
            d,
            d,
            status,
            String::from("diagonal"),
        )
    }

    /// Zero operator on `X_dim` with `l^2` norms.
    pub fn zero(dim: usize) -> Result<Self> {
        Ok(Self::diagonal(alloc::vec![0.0; dim], NormSpec::l2(), NormSpec::l2())?.with_label("zero"))
    }

    /// Identity on `X_dim` between the given norms.
    pub fn identity(dim: usize, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        Ok(Self::diagonal(alloc::vec![1.0; dim], domain, codomain)?.with_label("identity"))
    }

    /// Dense matrix operator (`rows = codomain dim`).
    pub fn dense(matrix: Matrix, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        if let Some((i, _)) = (0..matrix.rows())
            .flat_map(|i| (0..matrix.cols()).map(move |j| (i, j)))
            .enumerate()
            .find(|(_, (i, j))| !matrix.get(*i, *j).is_finite())
        {
            return Err(Error::NonFinite { index: i });
        }
        let (r, c) = (matrix.rows(), matrix.cols());
        Self::build(
            OperatorRepr::Dense(matrix),
            domain,
            codomain,
            c,
            r,
            CcStatus::Unknown,
            String::from("dense"),
        )
    }

    /// Discretized integral operator with kernel samples `K(x_i, y_j)`.
    /// Finite Hilbert-Schmidt norm, hence labelled completely continuous.
    pub fn kernel(samples: Matrix, h: f64, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("h", "kernel spacing must be positive"));
        }
        let (r, c) = (samples.rows(), samples.cols());
        Self::build(
            OperatorRepr::Kernel { samples, h },
            domain,
            codomain,
            c,
            r,
            CcStatus::CompletelyContinuous,
            String::from("kernel"),
        )
    }

    /// Discrete embedding `h^1_0 -> L^2_h` on `d` interior grid points: the
    /// identity on coefficients, measured by the discrete Sobolev norm on the
    /// domain and `(h sum u_i^2)^(1/2)` on the codomain.
    pub fn sobolev_embedding(d: usize, h: f64) -> Result<Self> {
        if d < 2 {
            return Err(invalid("d", "the Sobolev grid needs at least two points"));
        }
        let domain = NormSpec::sobolev_h1(h)?;
        let codomain = NormSpec::weighted_lp(2.0, alloc::vec![h; d])?.with_label(format!("l2(h={h})"));
        let mut op = Self::diagonal(alloc::vec![1.0; d], domain, codomain)?;
        op.cc_status = CcStatus::CompletelyContinuous;
        op.label = String::from("sobolev-embedding");
        Ok(op)
    }

    /// Right shift `X_dim -> X_{dim+1}`, an isometry between `l^p` norms.
    pub fn shift(dim: usize, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        for n in [&domain, &codomain] {
            if !matches!(n.kind(), NormKind::Lp { .. }) {
                return Err(Error::UnsupportedNorm {
                    operation: "shift",
                    kind: n.kind_name(),
                });
            }
        }
        Self::build(
            OperatorRepr::Shift,
            domain,
            codomain,
            dim,
            dim + 1,
            CcStatus::NotCompletelyContinuous,
            String::from("shift"),
        )
    }

    /// `outer ∘ inner`, materialized as a dense matrix.
    pub fn compose(outer: &LinearOperator, inner: &LinearOperator) -> Result<Self> {
        if outer.domain_dim != inner.codomain_dim {
            return Err(Error::DimensionMismatch {
                expected: outer.domain_dim,
                found: inner.codomain_dim,
            });
        }
        let m = outer.matrix().matmul(&inner.matrix());
        let status = match (outer.cc_status, inner.cc_status) {
            (CcStatus::CompletelyContinuous, _) | (_, CcStatus::CompletelyContinuous) => CcStatus::CompletelyContinuous,
            _ => CcStatus::Unknown,
        };
        let mut op = Self::dense(m, inner.domain.clone(), outer.codomain.clone())?;
        op.cc_status = status;
        op.label = format!("{}∘{}", outer.label, inner.label);
        Ok(op)
    }

    /// Replaces the display label.
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same action with different norms on domain and codomain.
    pub fn with_norms(mut self, domain: NormSpec, codomain: NormSpec) -> Result<Self> {
        domain.check_dim(self.domain_dim)?;
        codomain.check_dim(self.codomain_dim)?;
        self.domain = domain;
        self.codomain = codomain;
        Ok(self)
    }

    /// Display label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Representation.
    pub fn repr(&self) -> &OperatorRepr {
        &self.repr
    }

    /// Domain norm.
    pub fn domain(&self) -> &NormSpec {
        &self.domain
    }

    /// Codomain norm.
    pub fn codomain(&self) -> &NormSpec {
        &self.codomain
    }

    /// Domain dimension.
    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    /// Codomain dimension.
    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    /// Complete-continuity label.
    pub fn cc_status(&self) -> CcStatus {
        self.cc_status
    }

    /// `Tu`.
    pub fn apply(&self, u: &Element) -> Result<Element> {
        if u.dim() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                expected: self.domain_dim,
                found: u.dim(),
            });
        }
        Ok(Element::from_vec_unchecked(self.apply_slice(u.coeffs())))
    }

    pub(crate) fn apply_slice(&self, u: &[f64]) -> Vec<f64> {
        match &self.repr {
            OperatorRepr::Diagonal(l) => l.iter().zip(u).map(|(a, b)| a * b).collect(),
            OperatorRepr::Dense(m) => m.mul_vec(u),
            OperatorRepr::Kernel { samples, h } => samples.mul_vec(u).into_iter().map(|x| h * x).collect(),
            OperatorRepr::Shift => core::iter::once(0.0).chain(u.iter().copied()).collect(),
        }
    }

    /// Dense matrix of the action (`codomain_dim x domain_dim`).
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.codomain_dim, self.domain_dim);
        let mut e = alloc::vec![0.0; self.domain_dim];
        for j in 0..self.domain_dim {
            e[j] = 1.0;
            for (i, v) in self.apply_slice(&e).into_iter().enumerate() {
                *m.get_mut(i, j) = v;
            }
            e[j] = 0.0;
        }
        m
    }

    /// Singular values of the coefficient matrix, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.matrix())
    }

    /// `||T e_n||_Y` for `n = 1..=domain_dim`.
    pub fn basis_image_norms(&self) -> Vec<f64> {
        let mut e = alloc::vec![0.0; self.domain_dim];
        (0..self.domain_dim)
            .map(|j| {
                e[j] = 1.0;
                let v = self.codomain.eval(&self.apply_slice(&e));
                e[j] = 0.0;
                v
            })
            .collect()
    }
}

fn diagonal_status(lambda: &[f64]) -> CcStatus {
    let abs: Vec<f64> = lambda.iter().map(|x| libm::fabs(*x)).collect();
    let Some(&last) = abs.last() else {
        return CcStatus::Unknown;
    };
    if last == 0.0 {
        return CcStatus::CompletelyContinuous;
    }
    let tail = &abs[abs.len() / 2..];
    if tail.iter().all(|&x| x == last) && abs.len() > 1 {
        return CcStatus::NotCompletelyContinuous;
    }
    let head = abs.iter().copied().fold(0.0, f64::max);
    let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
    if decreasing && last <= 0.5 * head {
        CcStatus::CompletelyContinuous
    } else {
        CcStatus::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn l2() -> NormSpec {
        NormSpec::l2()
    }

    fn el(v: &[f64]) -> Element {
        Element::new(v.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        let id = LinearOperator::identity(3, l2(), l2()).unwrap();
        assert_eq!(id.apply(&el(&[1.0, -2.0, 3.0])).unwrap(), el(&[1.0, -2.0, 3.0]));
        let d = LinearOperator::diagonal(vec![1.0, 0.5, 0.25], l2(), l2()).unwrap();
        assert_eq!(d.apply(&el(&[0.0, 2.0, 0.0])).unwrap(), el(&[0.0, 1.0, 0.0]));
        let swap = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = LinearOperator::dense(swap, l2(), l2()).unwrap();
        assert_eq!(s.apply(&el(&[3.0, 4.0])).unwrap(), el(&[4.0, 3.0]));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = LinearOperator::diagonal(vec![1.0, 2.0], l2(), l2()).unwrap();
        assert_eq!(
            d.apply(&el(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn diagonal_labels() {
        let st = |l: Vec<f64>| LinearOperator::diagonal(l, l2(), l2()).unwrap().cc_status();
        assert_eq!(st(vec![1.0, 0.5, 0.25, 0.125]), CcStatus::CompletelyContinuous);
        assert_eq!(st(vec![1.0; 6]), CcStatus::NotCompletelyContinuous);
        assert_eq!(st(vec![1.0, 1.0, 1.0, 0.0, 0.0]), CcStatus::CompletelyContinuous);
        assert_eq!(st(vec![1.0, 3.0, 2.0, 5.0]), CcStatus::Unknown);
    }

    #[test]
    fn shift_action_and_isometry() {
        let s = LinearOperator::shift(4, l2(), l2()).unwrap();
        assert_eq!(
            s.apply(&Element::basis(4, 1).unwrap()).unwrap(),
            Element::basis(5, 2).unwrap()
        );
        let u = el(&[1.0, -2.0, 0.5, 3.0]);
        let tu = s.apply(&u).unwrap();
        assert!((l2().norm(&tu).unwrap() - l2().norm(&u).unwrap()).abs() < 1e-15);
        assert_eq!(s.cc_status(), CcStatus::NotCompletelyContinuous);
        assert!(LinearOperator::shift(4, NormSpec::sobolev_h1(1.0).unwrap(), l2()).is_err());
    }

    #[test]
    fn kernel_action_is_quadrature() {
        let k = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, 1.0]]).unwrap();
        let t = LinearOperator::kernel(k, 0.5, l2(), l2()).unwrap();
        assert_eq!(t.apply(&el(&[1.0, 1.0])).unwrap(), el(&[1.5, 3.5, 0.5]));
        assert_eq!(t.codomain_dim(), 3);
    }

    #[test]
    fn sobolev_embedding_validates_input() {
        assert!(LinearOperator::sobolev_embedding(1, 0.5).is_err());
        assert!(LinearOperator::sobolev_embedding(4, -1.0).is_err());
        let t = LinearOperator::sobolev_embedding(4, 0.2).unwrap();
        let z = t.apply(&Element::zeros(4)).unwrap();
        assert!(z.is_zero());
        assert_eq!(t.domain().norm(&Element::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn compose_multiplies_matrices() {
        let a = LinearOperator::diagonal(vec![2.0, 3.0], l2(), l2()).unwrap();
        let s = LinearOperator::shift(2, l2(), l2()).unwrap();
        let b = LinearOperator::diagonal(vec![1.0, 1.0, 1.0], l2(), l2()).unwrap();
        let c = LinearOperator::compose(&b, &s).unwrap();
        assert_eq!(c.apply(&el(&[1.0, 2.0])).unwrap(), el(&[0.0, 1.0, 2.0]));
        assert!(LinearOperator::compose(&a, &s).is_err());
    }
}
