//! Generalized Ehrling inequalities `||Tu||_Y <= eps ||u||_1 + C_eps ||u||_2`:
//! moduli `delta_eps`, the constructive constant `C_eps = eps / delta_eps`,
//! sharp constants, sampling verification, falsification, the reverse
//! inequality `|u|_Phi <= eps ||u||_X + C ||Tu||_Y` and the three-space form.
//!
//! Every computation is phrased through [`EhrlingProblem`], a triple of gauges
//! `(target, first, second)` standing for the inequality
//! `target(u) <= eps first(u) + C second(u)`. All ratios of these gauges are
//! 0-homogeneous, so the inner maximizations run on the Euclidean unit sphere.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::operators::LinearOperator;
use crate::optimize::{ball_samples, exceeds_on_sphere, maximize_on_sphere, Maximum, OptimizerSettings};
use crate::spaces::{DualFamily, Element, NormKind, NormSpec};

/// Tolerance on the verification residual below which a certificate passes.
pub const PASS_TOL: f64 = 1e-8;

/// Default `eps` grid.
pub const DEFAULT_EPS_GRID: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];

/// A gauge on coefficient vectors: a norm, or `u -> ||A u||` for a matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gauge {
    /// A norm on the domain itself.
    Norm(NormSpec),
    /// `u -> ||A u||_norm`.
    Induced {
        /// Coefficient matrix.
        matrix: Matrix,
        /// Norm on the image.
        norm: NormSpec,
        /// Display label.
        label: String,
    },
}

impl From<NormSpec> for Gauge {
    fn from(n: NormSpec) -> Self {
        Gauge::Norm(n)
    }
}

impl Gauge {
    /// `u -> ||Tu||_Y` with `Y` the codomain norm of `op`.
    pub fn of_operator(op: &LinearOperator) -> Self {
        Gauge::Induced {
            matrix: op.matrix(),
            norm: op.codomain().clone(),
            label: format!("|{}(u)|_{}", op.label(), op.codomain().label()),
        }
    }

    /// Display label.
    pub fn label(&self) -> String {
        match self {
            Gauge::Norm(n) => String::from(n.label()),
            Gauge::Induced { label, .. } => label.clone(),
        }
    }

    /// Checks that vectors of dimension `dim` can be measured.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Gauge::Norm(n) => n.check_dim(dim),
            Gauge::Induced { matrix, norm, .. } => {
                if matrix.cols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: matrix.cols(),
                        found: dim,
                    });
                }
                norm.check_dim(matrix.rows())
            }
        }
    }

    /// Value at `u` (the upper enclosure for very weak norms).
    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            Gauge::Norm(n) => n.eval(u),
            Gauge::Induced { matrix, norm, .. } => norm.eval(&matrix.mul_vec(u)),
        }
    }

    /// Lower and upper bounds on the modelled value at `u`.
    pub fn bracket(&self, u: &[f64]) -> (f64, f64) {
        match self {
            Gauge::Norm(n) => n.bracket(u),
            Gauge::Induced { matrix, norm, .. } => norm.bracket(&matrix.mul_vec(u)),
        }
    }

    /// A subgradient at `u`, written into `out`.
    pub fn subgradient(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Gauge::Norm(n) => n.subgradient(u, out),
            Gauge::Induced { matrix, norm, .. } => {
                let y = matrix.mul_vec(u);
                let mut gy = vec![0.0; y.len()];
                norm.subgradient(&y, &mut gy);
                out.copy_from_slice(&matrix.tr_mul_vec(&gy));
            }
        }
    }

    /// True when the gauge vanishes identically.
    fn is_trivially_zero(&self) -> bool {
        match self {
            Gauge::Induced { matrix, .. } => (0..matrix.rows()).all(|i| matrix.row(i).iter().all(|&x| x == 0.0)),
            Gauge::Norm(_) => false,
        }
    }
}

/// The inequality `target(u) <= eps first(u) + C second(u)` on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EhrlingProblem {
    target: Gauge,
    first: Gauge,
    second: Gauge,
    dim: usize,
}

#[derive(Debug, Clone, Copy)]
enum Ratio {
    /// target / first
    Bound,
    /// second / first
    SecondOverFirst,
    /// target / max(first, second / delta)
    Modulus(f64),
    /// (target - eps first) / second
    Sharp(f64),
    /// (target - eps first - c second) / first
    Residual(f64, f64),
}

impl EhrlingProblem {
    /// Builds and validates a problem on `R^dim`.
    pub fn new(target: Gauge, first: Gauge, second: Gauge, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        target.check_dim(dim)?;
        first.check_dim(dim)?;
        second.check_dim(dim)?;
        Ok(Self {
            target,
            first,
            second,
            dim,
        })
    }

    /// `||Tu||_Y <= eps ||u||_1 + C ||u||_2`.
    pub fn forward(t: &LinearOperator, norm1: &NormSpec, norm2: &Gauge) -> Result<Self> {
        Self::new(
            Gauge::of_operator(t),
            Gauge::Norm(norm1.clone()),
            norm2.clone(),
            t.domain_dim(),
        )
    }

    /// `|u|_Phi <= eps ||u||_X + C ||Tu||_Y` with `X` the domain norm of `t`
    /// and `|.|_Phi` evaluated with relative tail tolerance `tol`.
    pub fn reverse(t: &LinearOperator, fam: &DualFamily, tol: f64) -> Result<Self> {
        let d = t.domain_dim();
        let fam = if fam.dim() < d { fam.with_dim(d)? } else { fam.clone() };
        let vw = NormSpec::very_weak(fam, tol)?;
        Self::new(
            Gauge::Norm(vw),
            Gauge::Norm(t.domain().clone()),
            Gauge::of_operator(t),
            d,
        )
    }

    /// `||theta u||_Y <= eps ||u||_X + C ||tau theta u||_Z`.
    pub fn three_space(theta: &LinearOperator, tau: &LinearOperator) -> Result<Self> {
        let chain = LinearOperator::compose(tau, theta)?;
        Self::new(
            Gauge::of_operator(theta),
            Gauge::Norm(theta.domain().clone()),
            Gauge::of_operator(&chain),
            theta.domain_dim(),
        )
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Gauge on the left-hand side.
    pub fn target(&self) -> &Gauge {
        &self.target
    }

    /// Gauge multiplied by `eps`.
    pub fn first(&self) -> &Gauge {
        &self.first
    }

    /// Gauge multiplied by `C`.
    pub fn second(&self) -> &Gauge {
        &self.second
    }

    fn objective(&self, kind: Ratio, v: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let a = self.target.value(v);
        let b = self.first.value(v);
        let d = self.second.value(v);
        // numerator and denominator as linear combinations of (a, b, d)
        let (num, den) = match kind {
            Ratio::Bound => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            Ratio::SecondOverFirst => ([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
            Ratio::Modulus(delta) => {
                if b >= d / delta {
                    ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
                } else {
                    ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0 / delta])
                }
            }
            Ratio::Sharp(eps) => ([1.0, -eps, 0.0], [0.0, 0.0, 1.0]),
            Ratio::Residual(eps, c) => ([1.0, -eps, -c], [0.0, 1.0, 0.0]),
        };
        let n = num[0] * a + num[1] * b + num[2] * d;
        let dn = den[0] * a + den[1] * b + den[2] * d;
        if !(dn > 0.0) {
            return f64::NEG_INFINITY;
        }
        let value = n / dn;
        if let Some(g) = grad {
            let mut tmp = vec![0.0; v.len()];
            for (k, gauge) in [&self.target, &self.first, &self.second].into_iter().enumerate() {
                let w = num[k] - value * den[k];
                if w == 0.0 {
                    continue;
                }
                gauge.subgradient(v, &mut tmp);
                for (gi, ti) in g.iter_mut().zip(&tmp) {
                    *gi += w * ti / dn;
                }
            }
        }
        value
    }

    fn maximize(&self, kind: Ratio, extra: &[Vec<f64>], opt: &OptimizerSettings) -> Maximum {
        let f = |v: &[f64], g: Option<&mut [f64]>| self.objective(kind, v, g);
        maximize_on_sphere(self.dim, &f, extra, opt)
    }

    /// Decides `g(delta) > eps`; stops at the first point above `eps`.
    fn restricted_exceeds(&self, delta: f64, eps: f64, extra: &[Vec<f64>], opt: &OptimizerSettings) -> Maximum {
        let f = |v: &[f64], g: Option<&mut [f64]>| self.objective(Ratio::Modulus(delta), v, g);
        exceeds_on_sphere(self.dim, &f, extra, opt, eps)
    }

    /// Pointwise residual `target - eps first - C second`, divided by
    /// `first(u)`, as `(pessimistic, optimistic)` using the gauge brackets.
    pub fn residual_bracket(&self, u: &[f64], eps: f64, c: f64) -> (f64, f64) {
        let (a_lo, a_hi) = self.target.bracket(u);
        let b = self.first.value(u);
        let (d_lo, d_hi) = self.second.bracket(u);
        if b == 0.0 {
            return (0.0, 0.0);
        }
        ((a_hi - eps * b - c * d_lo) / b, (a_lo - eps * b - c * d_hi) / b)
    }

    /// `sup target / first`, the bound of the left-hand side on the unit
    /// ball of the first gauge.
    pub fn target_bound(&self, opt: &OptimizerSettings) -> Maximum {
        self.maximize(Ratio::Bound, &[], opt)
    }

    /// `g(delta) = max{target(u) : first(u) <= 1, second(u) <= delta}`.
    pub fn restricted_max(&self, delta: f64, extra: &[Vec<f64>], opt: &OptimizerSettings) -> Maximum {
        self.maximize(Ratio::Modulus(delta), extra, opt)
    }

    /// Largest `delta` with `g(delta) <= eps`, found by geometric bisection
    /// and then shrunk while an adversarial search still finds a point
    /// violating the inequality with `C = eps / delta`.
    pub fn modulus(&self, eps: f64, opt: &OptimizerSettings) -> Result<Modulus> {
        check_eps(eps)?;
        let bound = self.target_bound(opt);
        let spread = self.maximize(Ratio::SecondOverFirst, &[], opt);
        let delta_max = spread.value;
        if !(delta_max > 0.0 && delta_max.is_finite()) {
            return Err(invalid("second", "second gauge vanishes on the search sphere"));
        }
        let mut evaluations = bound.evaluations + spread.evaluations;
        if self.target.is_trivially_zero() || bound.value <= 0.0 {
            return Ok(Modulus {
                eps,
                delta: delta_max,
                g_at_delta: 0.0,
                search_upper: delta_max,
                saturated: true,
                safety_shrinks: 0,
                evaluations,
            });
        }
        let mut pool: Vec<Vec<f64>> = vec![bound.argmax.clone(), spread.argmax.clone()];

        let (mut delta, g_at, saturated) = if bound.value <= eps {
            // The target is already below eps on the whole first-gauge ball.
            (delta_max * eps / bound.value, bound.value, true)
        } else {
            let mut lo = delta_max * opt.delta_floor_rel;
            let mut hi = delta_max;
            let g_lo = self.restricted_max(lo, &pool, opt);
            evaluations += g_lo.evaluations;
            if g_lo.value > eps {
                return Err(Error::NoModulus {
                    eps,
                    delta_floor: lo,
                    value: g_lo.value,
                });
            }
            let mut g_at = g_lo.value;
            pool.push(g_lo.argmax);
            while hi / lo > 1.0 + opt.bisection_rel_width {
                let mid = libm::sqrt(lo * hi);
                let g = self.restricted_exceeds(mid, eps, &pool, opt);
                evaluations += g.evaluations;
                if g.value <= eps {
                    lo = mid;
                    g_at = g.value;
                } else {
                    hi = mid;
                }
                remember(&mut pool, g.argmax);
            }
            (lo, g_at, false)
        };

        // The sharp constant is a lower bound for every valid C.
        let sharp = self.maximize(Ratio::Sharp(eps), &pool, opt);
        evaluations += sharp.evaluations;
        if sharp.value > 0.0 && eps / delta < sharp.value {
            delta = eps / sharp.value * (1.0 - 1e-9);
        }
        remember(&mut pool, sharp.argmax);

        let mut safety_shrinks = 0;
        for _ in 0..opt.safety_rounds {
            let r = self.maximize(Ratio::Residual(eps, eps / delta), &pool, opt);
            evaluations += r.evaluations;
            if r.value <= 0.0 {
                break;
            }
            remember(&mut pool, r.argmax);
            delta *= 0.9;
            safety_shrinks += 1;
        }
        Ok(Modulus {
            eps,
            delta,
            g_at_delta: g_at,
            search_upper: delta_max,
            saturated,
            safety_shrinks,
            evaluations,
        })
    }

    /// Estimate of `C*(eps) = sup (target - eps first) / second`, clamped
    /// below at zero.
    pub fn sharp_constant(&self, eps: f64, opt: &OptimizerSettings) -> Result<SharpConstant> {
        check_eps(eps)?;
        let m = self.maximize(Ratio::Sharp(eps), &[], opt);
        let b = self.first.value(&m.argmax);
        let witness = Element::new(m.argmax.iter().map(|x| x / b).collect())?;
        Ok(SharpConstant {
            eps,
            value: m.value.max(0.0),
            raw: m.value,
            witness,
            approximate: !m.converged,
            evaluations: m.evaluations,
        })
    }

    /// Evaluates the inequality with `(eps, C)` at the sampler's points.
    ///
    /// The verdict is `Pass` when the pessimistic residual (upper bound of
    /// the target, lower bound of the second gauge) stays below
    /// [`PASS_TOL`] everywhere, `Fail` when the optimistic residual is
    /// positive somewhere, `Inconclusive` otherwise.
    pub fn verify(&self, eps: f64, c: f64, sampler: &Sampler, opt: &OptimizerSettings) -> Result<Verification> {
        check_eps(eps)?;
        if !(c >= 0.0 && c.is_finite()) {
            return Err(invalid("C", "constant must be finite and nonnegative"));
        }
        let mut points = ball_samples(self.dim, sampler.samples, sampler.seed);
        let mut basis_from = points.len();
        if sampler.basis {
            basis_from = points.len();
            for i in 0..self.dim {
                let mut e = vec![0.0; self.dim];
                e[i] = 1.0;
                points.push(e);
            }
        }
        let basis_to = points.len();
        if sampler.adversarial {
            points.push(self.maximize(Ratio::Residual(eps, c), &[], opt).argmax);
            points.push(self.maximize(Ratio::Sharp(eps), &[], opt).argmax);
        }
        points.extend(sampler.extra.iter().cloned());

        let mut worst = f64::NEG_INFINITY;
        let mut violation: Option<(f64, usize)> = None;
        for (idx, u) in points.iter().enumerate() {
            if u.len() != self.dim || self.first.value(u) == 0.0 {
                continue;
            }
            let (pess, optim) = self.residual_bracket(u, eps, c);
            worst = worst.max(pess);
            if optim > 0.0 && violation.is_none_or(|(r, _)| optim > r) {
                violation = Some((optim, idx));
            }
        }
        let verdict = if worst <= PASS_TOL {
            Verdict::Pass
        } else if violation.is_some() {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        let witness = match (verdict, violation) {
            (Verdict::Fail, Some((_, idx))) => {
                let basis_index = (basis_from..basis_to).contains(&idx).then(|| idx - basis_from + 1);
                Some(self.witness_at(&points[idx], eps, c, basis_index)?)
            }
            _ => None,
        };
        Ok(Verification {
            eps,
            c,
            verdict,
            residual: worst,
            witness,
            points_checked: points.len(),
        })
    }

    fn witness_at(&self, u: &[f64], eps: f64, c: f64, basis_index: Option<usize>) -> Result<Witness> {
        let b = self.first.value(u);
        let u: Vec<f64> = u.iter().map(|x| x / b).collect();
        let (a_lo, _) = self.target.bracket(&u);
        let (_, d_hi) = self.second.bracket(&u);
        let (_, residual) = self.residual_bracket(&u, eps, c);
        Ok(Witness {
            u: Element::new(u)?,
            eps,
            lower_bound_on_c: (a_lo - eps) / d_hi,
            tested_c: c,
            residual,
            basis_index,
        })
    }

    /// Certificate table over an `eps` grid: one row per distinct `eps`,
    /// sorted descending.
    pub fn certify(&self, eps_grid: &[f64], sampler: &Sampler, opt: &OptimizerSettings) -> Result<EhrlingCertificate> {
        if eps_grid.is_empty() {
            return Err(invalid("eps", "the eps grid is empty"));
        }
        let mut grid: Vec<f64> = eps_grid.to_vec();
        for &e in &grid {
            check_eps(e)?;
        }
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup();

        let mut moduli = Vec::with_capacity(grid.len());
        for &eps in &grid {
            moduli.push(self.modulus(eps, opt)?);
        }
        // A valid modulus at eps scales to a valid modulus at eps' > eps:
        // g(t delta) <= t g(delta). Carrying it upwards keeps delta
        // nondecreasing and C nonincreasing in eps.
        for i in 1..moduli.len() {
            let (e0, d0) = (moduli[i - 1].eps, moduli[i - 1].delta);
            let carried = d0 * moduli[i].eps / e0;
            if carried > moduli[i].delta {
                moduli[i].delta = carried;
            }
        }

        let mut rows = Vec::with_capacity(grid.len());
        for m in moduli.iter().rev() {
            let c = certificate_from_modulus(m.eps, m.delta)?;
            let sharp = self.sharp_constant(m.eps, opt)?;
            let check = self.verify(m.eps, c, sampler, opt)?;
            rows.push(CertificateRow {
                eps: m.eps,
                delta: m.delta,
                c,
                c_optimal: sharp.value,
                method: Method::Modulus,
                residual: check.residual,
                verdict: check.verdict,
                saturated: m.saturated,
            });
        }
        Ok(EhrlingCertificate {
            target: self.target.label(),
            norm1: self.first.label(),
            norm2: self.second.label(),
            rows,
        })
    }
}

fn remember(pool: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    if pool.len() >= 16 {
        pool.remove(2);
    }
    pool.push(v);
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(invalid("eps", format!("must be positive, got {eps}")))
    }
}

/// Output of the modulus search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Modulus {
    /// Requested `eps`.
    pub eps: f64,
    /// Returned modulus.
    pub delta: f64,
    /// Estimated `g(delta)`.
    pub g_at_delta: f64,
    /// Bisection upper bound `sup second / first`.
    pub search_upper: f64,
    /// True when `g` never exceeds `eps`, so no bisection was needed.
    pub saturated: bool,
    /// Number of adversarial shrink steps applied after bisection.
    pub safety_shrinks: usize,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

/// Estimate of the sharp constant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SharpConstant {
    /// Requested `eps`.
    pub eps: f64,
    /// `max(raw, 0)`.
    pub value: f64,
    /// Best objective value found.
    pub raw: f64,
    /// Maximizer, scaled to `first(u) = 1`.
    pub witness: Element,
    /// True when the optimizer budget ran out.
    pub approximate: bool,
    /// Objective evaluations spent.
    pub evaluations: usize,
}

/// Verification verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    /// Holds at every checked point, even with pessimistic bounds.
    Pass,
    /// Fails at some point, even with optimistic bounds.
    Fail,
    /// Neither could be certified.
    Inconclusive,
}

/// Points at which an inequality is checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    /// Random ball samples.
    pub samples: usize,
    /// Sampling seed.
    pub seed: u64,
    /// Include the canonical basis vectors.
    pub basis: bool,
    /// Include optimizer maximizers of the residual and of the sharp ratio.
    pub adversarial: bool,
    /// Additional points.
    pub extra: Vec<Vec<f64>>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            basis: true,
            adversarial: true,
            extra: Vec::new(),
        }
    }
}

/// Result of [`EhrlingProblem::verify`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Verification {
    /// Tested `eps`.
    pub eps: f64,
    /// Tested constant.
    pub c: f64,
    /// Verdict.
    pub verdict: Verdict,
    /// Maximum pessimistic residual per unit of the first gauge.
    pub residual: f64,
    /// Violating point when the verdict is `Fail`.
    pub witness: Option<Witness>,
    /// Number of points evaluated.
    pub points_checked: usize,
}

/// A point at which a candidate inequality fails.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Witness {
    /// The point, scaled to `first(u) = 1`.
    pub u: Element,
    /// `eps` at which it was found.
    pub eps: f64,
    /// Every valid constant at this `eps` is at least this value.
    pub lower_bound_on_c: f64,
    /// Constant the witness was tested against.
    pub tested_c: f64,
    /// Optimistic residual at `tested_c` (positive).
    pub residual: f64,
    /// `n` when `u` is a multiple of `e_n`.
    pub basis_index: Option<usize>,
}

/// How a table row's constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    /// `C = eps / delta_eps`.
    Modulus,
    /// Sharp-constant estimate.
    Optimal,
}

/// One `(eps, delta, C)` row.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertificateRow {
    /// `eps`.
    pub eps: f64,
    /// Modulus.
    pub delta: f64,
    /// Constant `eps / delta`.
    pub c: f64,
    /// Sharp-constant estimate at the same `eps`.
    pub c_optimal: f64,
    /// Origin of `c`.
    pub method: Method,
    /// Maximum pessimistic verification residual.
    pub residual: f64,
    /// Verification verdict.
    pub verdict: Verdict,
    /// True when the modulus search was saturated.
    pub saturated: bool,
}

/// Certificate table for one inequality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EhrlingCertificate {
    /// Label of the left-hand side.
    pub target: String,
    /// Label of the gauge multiplied by `eps`.
    pub norm1: String,
    /// Label of the gauge multiplied by `C`.
    pub norm2: String,
    /// Rows sorted by `eps` descending.
    pub rows: Vec<CertificateRow>,
}

impl EhrlingCertificate {
    /// True when every row passed verification.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }
}

/// Modulus `delta_eps` for `||Tu||_Y <= eps ||u||_1 + C ||u||_2`.
pub fn modulus_delta(
    t: &LinearOperator,
    norm1: &NormSpec,
    norm2: &Gauge,
    eps: f64,
    opt: &OptimizerSettings,
) -> Result<Modulus> {
    EhrlingProblem::forward(t, norm1, norm2)?.modulus(eps, opt)
}

/// `C_eps = eps / delta_eps`.
pub fn certificate_from_modulus(eps: f64, delta: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok(eps / delta)
}

/// Sharp constant `sup (||Tu||_Y - eps ||u||_1) / ||u||_2`.
pub fn optimal_constant(
    t: &LinearOperator,
    norm1: &NormSpec,
    norm2: &Gauge,
    eps: f64,
    opt: &OptimizerSettings,
) -> Result<SharpConstant> {
    EhrlingProblem::forward(t, norm1, norm2)?.sharp_constant(eps, opt)
}

/// Checks `||Tu||_Y <= eps ||u||_1 + C ||u||_2` on the sampler's points.
pub fn verify_certificate(
    t: &LinearOperator,
    norm1: &NormSpec,
    norm2: &Gauge,
    eps: f64,
    c: f64,
    sampler: &Sampler,
    opt: &OptimizerSettings,
) -> Result<Verification> {
    EhrlingProblem::forward(t, norm1, norm2)?.verify(eps, c, sampler, opt)
}

/// Certificate table for `||Tu||_Y <= eps ||u||_1 + C ||u||_2`.
pub fn certify(
    t: &LinearOperator,
    norm1: &NormSpec,
    norm2: &Gauge,
    eps_grid: &[f64],
    sampler: &Sampler,
    opt: &OptimizerSettings,
) -> Result<EhrlingCertificate> {
    EhrlingProblem::forward(t, norm1, norm2)?.certify(eps_grid, sampler, opt)
}

/// Budget for [`falsify`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FalsifySettings {
    /// Relative tail tolerance of the very weak norm.
    pub tolerance: f64,
    /// Number of basis vectors scanned (capped at the domain dimension).
    pub basis_depth: usize,
    /// Ascent settings.
    pub optimizer: OptimizerSettings,
}

impl Default for FalsifySettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-15,
            basis_depth: usize::MAX,
            optimizer: OptimizerSettings::default(),
        }
    }
}

/// Result of [`falsify`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "outcome"))]
pub enum FalsifyOutcome {
    /// No constant up to `C_max` works at this `eps`.
    Witness(Witness),
    /// Budget exhausted; inconclusive.
    NotFound {
        /// Best ratio found.
        best_ratio: f64,
        /// Point achieving it, `||u||_1 = 1`.
        best: Element,
    },
}

/// Searches for `u` with `||u||_1 = 1` and
/// `(||Tu||_Y - eps) / |u|_Phi^hi > c_max`: basis vectors first, then
/// optimizer ascent on the ratio.
pub fn falsify(
    t: &LinearOperator,
    norm1: &NormSpec,
    fam: &DualFamily,
    eps: f64,
    c_max: f64,
    settings: &FalsifySettings,
) -> Result<FalsifyOutcome> {
    check_eps(eps)?;
    if !(c_max.is_finite() && c_max > 0.0) {
        return Err(invalid("c_max", "search cap must be positive"));
    }
    let d = t.domain_dim();
    let fam = if fam.dim() < d { fam.with_dim(d)? } else { fam.clone() };
    let vw = NormSpec::very_weak(fam, settings.tolerance)?;
    let p = EhrlingProblem::forward(t, norm1, &Gauge::Norm(vw))?;
    if p.target.is_trivially_zero() {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return Ok(FalsifyOutcome::NotFound {
            best_ratio: f64::NEG_INFINITY,
            best: Element::new(p.scaled_to_first(&e))?,
        });
    }
    let ratio = |u: &[f64]| {
        let (a_lo, _) = p.target.bracket(u);
        let b = p.first.value(u);
        let (_, d_hi) = p.second.bracket(u);
        (a_lo - eps * b) / d_hi
    };
    let mut best: Option<(f64, Vec<f64>, Option<usize>)> = None;
    for n in 1..=d.min(settings.basis_depth) {
        let mut e = vec![0.0; d];
        e[n - 1] = 1.0;
        let r = ratio(&e);
        if best.as_ref().is_none_or(|b| r > b.0) {
            best = Some((r, e, Some(n)));
        }
    }
    let basis_best = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
    if basis_best <= c_max {
        let extra: Vec<Vec<f64>> = best.iter().map(|b| b.1.clone()).collect();
        let m = p.maximize(Ratio::Sharp(eps), &extra, &settings.optimizer);
        let r = ratio(&m.argmax);
        if r > basis_best {
            best = Some((r, m.argmax, None));
        }
    }
    let (r, u, basis_index) = best.expect("dimension is positive");
    if r > c_max {
        Ok(FalsifyOutcome::Witness(p.witness_at(&u, eps, c_max, basis_index)?))
    } else {
        Ok(FalsifyOutcome::NotFound {
            best_ratio: r,
            best: Element::new(p.scaled_to_first(&u))?,
        })
    }
}

impl EhrlingProblem {
    fn scaled_to_first(&self, u: &[f64]) -> Vec<f64> {
        let b = self.first.value(u);
        u.iter().map(|x| x / b).collect()
    }
}

/// `(delta, C)` for the reverse inequality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReverseCertificate {
    /// `eps`.
    pub eps: f64,
    /// Modulus in `||Tu||_Y`.
    pub delta: f64,
    /// `eps / delta`.
    pub c: f64,
    /// Smallest singular value of the coefficient matrix.
    pub smallest_singular_value: f64,
    /// Modulus search details.
    pub modulus: Modulus,
}

/// `(delta, C)` with `|u|_Phi <= eps ||u||_X + C ||Tu||_Y` on the truncation,
/// for injective `T` on an `l^p`-type domain with `1 < p < inf`.
pub fn reverse_certificate(
    t: &LinearOperator,
    fam: &DualFamily,
    eps: f64,
    tol: f64,
    opt: &OptimizerSettings,
) -> Result<ReverseCertificate> {
    match t.domain().kind() {
        NormKind::Lp { p } | NormKind::WeightedLp { p, .. } if *p > 1.0 && p.is_finite() => {}
        _ => {
            return Err(Error::UnsupportedNorm {
                operation: "reverse certificate",
                kind: t.domain().kind_name(),
            })
        }
    }
    let sv = t.singular_values();
    let smallest = if t.codomain_dim() < t.domain_dim() {
        0.0
    } else {
        sv.last().copied().unwrap_or(0.0)
    };
    if !(smallest > 1e-10) {
        return Err(Error::NotInjective {
            smallest_singular_value: smallest,
        });
    }
    let p = EhrlingProblem::reverse(t, fam, tol)?;
    let modulus = p.modulus(eps, opt)?;
    Ok(ReverseCertificate {
        eps,
        delta: modulus.delta,
        c: certificate_from_modulus(eps, modulus.delta)?,
        smallest_singular_value: smallest,
        modulus,
    })
}

/// Classical three-space certificate
/// `||theta u||_Y <= eps ||u||_X + C ||tau theta u||_Z`.
pub fn three_space_certificate(
    theta: &LinearOperator,
    tau: &LinearOperator,
    eps_grid: &[f64],
    sampler: &Sampler,
    opt: &OptimizerSettings,
) -> Result<EhrlingCertificate> {
    EhrlingProblem::three_space(theta, tau)?.certify(eps_grid, sampler, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::DualFamily;
    use alloc::vec;

    fn quick() -> OptimizerSettings {
        OptimizerSettings {
            starts: 16,
            iterations: 100,
            ..OptimizerSettings::default()
        }
    }

    fn small_sampler() -> Sampler {
        Sampler {
            samples: 2000,
            ..Sampler::default()
        }
    }

    #[test]
    fn certificate_from_modulus_examples() {
        assert_eq!(certificate_from_modulus(0.5, 0.25).unwrap(), 2.0);
        assert_eq!(certificate_from_modulus(1.0, 1.0).unwrap(), 1.0);
        assert!(certificate_from_modulus(1.0, 0.0).is_err());
        assert!(certificate_from_modulus(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_operator_modulus_is_search_bound() {
        let t = LinearOperator::zero(4).unwrap();
        let l2 = NormSpec::l2();
        let m = modulus_delta(&t, &l2, &Gauge::Norm(l2.clone()), 0.3, &quick()).unwrap();
        assert!((m.delta - 1.0).abs() < 1e-9 && m.saturated);
        let s = optimal_constant(&t, &l2, &Gauge::Norm(l2.clone()), 0.3, &quick()).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn identity_modulus_matches_closed_form() {
        let l2 = NormSpec::l2();
        let t = LinearOperator::identity(8, l2.clone(), l2.clone()).unwrap();
        for eps in [0.5, 0.25, 0.1] {
            let m = modulus_delta(&t, &l2, &Gauge::Norm(l2.clone()), eps, &quick()).unwrap();
            assert!(
                m.delta <= eps * (1.0 + 1e-12) && m.delta >= eps / 1.0011,
                "{eps}: {}",
                m.delta
            );
        }
    }

    #[test]
    fn scalar_sharp_constant() {
        let abs = NormSpec::l2();
        let t = LinearOperator::diagonal(vec![3.0], abs.clone(), abs.clone()).unwrap();
        for eps in [0.5, 2.0, 4.0] {
            let s = optimal_constant(&t, &abs, &Gauge::Norm(abs.clone()), eps, &quick()).unwrap();
            assert!((s.value - (3.0f64 - eps).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_identity_equal_split() {
        let l2 = NormSpec::l2();
        let t = LinearOperator::identity(5, l2.clone(), l2.clone()).unwrap();
        let v = verify_certificate(&t, &l2, &Gauge::Norm(l2.clone()), 0.5, 0.5, &small_sampler(), &quick()).unwrap();
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(v.residual <= 1e-12);
        let v = verify_certificate(&t, &l2, &Gauge::Norm(l2.clone()), 0.5, 0.4, &small_sampler(), &quick()).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        assert!(v.witness.unwrap().lower_bound_on_c > 0.4);
    }

    #[test]
    fn shift_fails_against_very_weak_norm() {
        let l2 = NormSpec::l2();
        let t = LinearOperator::shift(32, l2.clone(), l2.clone()).unwrap();
        let vw = NormSpec::very_weak(DualFamily::coordinate_l2(32).unwrap(), 1e-15).unwrap();
        let c = 1e3;
        let v = verify_certificate(&t, &l2, &Gauge::Norm(vw), 0.5, c, &small_sampler(), &quick()).unwrap();
        assert_eq!(v.verdict, Verdict::Fail);
        let w = v.witness.unwrap();
        assert!(w.lower_bound_on_c > c);
    }

    #[test]
    fn falsify_zero_operator_is_not_found() {
        let t = LinearOperator::zero(6).unwrap();
        let fam = DualFamily::coordinate_l2(6).unwrap();
        let out = falsify(&t, &NormSpec::l2(), &fam, 0.5, 1e4, &FalsifySettings::default()).unwrap();
        assert!(matches!(out, FalsifyOutcome::NotFound { .. }));
    }

    #[test]
    fn reverse_rejects_singular_operator() {
        let l2 = NormSpec::l2();
        let t = LinearOperator::diagonal(vec![1.0, 0.5, 0.0], l2.clone(), l2.clone()).unwrap();
        let fam = DualFamily::coordinate_l2(3).unwrap();
        assert!(matches!(
            reverse_certificate(&t, &fam, 0.1, 1e-15, &quick()),
            Err(Error::NotInjective { .. })
        ));
    }

    #[test]
    fn nonpositive_eps_is_rejected() {
        let l2 = NormSpec::l2();
        let t = LinearOperator::identity(2, l2.clone(), l2.clone()).unwrap();
        assert!(modulus_delta(&t, &l2, &Gauge::Norm(l2.clone()), 0.0, &quick()).is_err());
        assert!(optimal_constant(&t, &l2, &Gauge::Norm(l2.clone()), -1.0, &quick()).is_err());
    }

    #[test]
    fn composition_mismatch_is_reported() {
        let l2 = NormSpec::l2();
        let theta = LinearOperator::identity(3, l2.clone(), l2.clone()).unwrap();
        let tau = LinearOperator::identity(4, l2.clone(), l2.clone()).unwrap();
        assert!(matches!(
            three_space_certificate(&theta, &tau, &[0.5], &small_sampler(), &quick()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
