//! Canonical sequences, finite-probe classification of strong / weak / very
//! weak convergence, and the construction of unbounded sequences that are
//! null in the very weak norm.
//!
//! Weak convergence is represented by residuals `|<f, u_n - u>|` over a
//! finite list of probe functionals. That is a surrogate, and reports say so.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::optimize::decaying_gaussians;
use crate::spaces::{DualFamily, Element, Functional};
use crate::veryweak::{terms_for, very_weak_norm, CertifiedValue};

/// Ambient dimension `d_n` used for the `n`-th counterexample term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DimSchedule {
    /// `d_n = N_n + n + margin`.
    Margin(usize),
    /// The same `d` for every `n`.
    Fixed(usize),
}

impl Default for DimSchedule {
    fn default() -> Self {
        DimSchedule::Margin(4)
    }
}

impl DimSchedule {
    /// `d_n` given `N_n`.
    pub fn dim(self, n: usize, terms: usize) -> usize {
        match self {
            DimSchedule::Margin(m) => terms + n + m,
            DimSchedule::Fixed(d) => d,
        }
    }
}

/// Generation rule of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceRule {
    /// `u_n = e_n` in `X_dim`.
    Basis {
        /// Ambient dimension.
        dim: usize,
    },
    /// `u_n = target + rate^n e_1`.
    StronglyConvergent {
        /// Limit.
        target: Element,
        /// Geometric rate in `(0, 1)`.
        rate: f64,
    },
    /// `u_n = n xi_n / ||xi_n||` with `xi_n` orthogonal to the first `N_n`
    /// functionals of the family.
    Counterexample {
        /// Family defining the very weak norm.
        family: DualFamily,
        /// Dimension schedule.
        schedule: DimSchedule,
    },
    /// Explicit terms.
    Custom {
        /// `u_1, ..., u_horizon`.
        terms: Vec<Element>,
        /// Candidate limit (zero when absent).
        limit: Option<Element>,
    },
}

/// A deterministic sequence `u_1, ..., u_horizon` with a candidate limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceGen {
    rule: SequenceRule,
    horizon: usize,
}

impl SequenceGen {
    /// Canonical basis `e_1, ..., e_horizon` in `X_dim`.
    pub fn basis(dim: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > dim {
            return Err(invalid("horizon", format!("must lie in 1..={dim}")));
        }
        Ok(Self {
            rule: SequenceRule::Basis { dim },
            horizon,
        })
    }

    /// `target + rate^n e_1`.
    pub fn strongly_convergent(target: Element, rate: f64, horizon: usize) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(invalid("rate", format!("must lie in (0, 1), got {rate}")));
        }
        if horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        Ok(Self {
            rule: SequenceRule::StronglyConvergent { target, rate },
            horizon,
        })
    }

    /// Counterexample terms built by [`counterexample_term`].
    pub fn counterexample(family: DualFamily, schedule: DimSchedule, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        Ok(Self {
            rule: SequenceRule::Counterexample { family, schedule },
            horizon,
        })
    }

    /// Explicit terms; the horizon is their count.
    pub fn custom(terms: Vec<Element>, limit: Option<Element>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("terms", "at least one term is required"));
        }
        Ok(Self {
            horizon: terms.len(),
            rule: SequenceRule::Custom { terms, limit },
        })
    }

    /// Rule.
    pub fn rule(&self) -> &SequenceRule {
        &self.rule
    }

    /// Number of terms.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `u_n`, `1 <= n <= horizon`.
    pub fn term(&self, n: usize) -> Result<Element> {
        if n == 0 || n > self.horizon {
            return Err(Error::OutOfRange {
                index: n,
                horizon: self.horizon,
            });
        }
        match &self.rule {
            SequenceRule::Basis { dim } => Element::basis(*dim, n),
            SequenceRule::StronglyConvergent { target, rate } => {
                let mut e = Element::basis(target.dim(), 1)?;
                e = e.scaled(libm::pow(*rate, n as f64));
                Ok(target.axpy(1.0, &e))
            }
            SequenceRule::Counterexample { family, schedule } => Ok(counterexample_term(family, n, *schedule)?.u),
            SequenceRule::Custom { terms, .. } => Ok(terms[n - 1].clone()),
        }
    }

    /// Candidate limit.
    pub fn limit(&self) -> Element {
        match &self.rule {
            SequenceRule::Basis { dim } => Element::zeros(*dim),
            SequenceRule::StronglyConvergent { target, .. } => target.clone(),
            SequenceRule::Counterexample { .. } => Element::zeros(1),
            SequenceRule::Custom { limit, terms } => limit.clone().unwrap_or_else(|| Element::zeros(terms[0].dim())),
        }
    }

    /// Short name of the rule.
    pub fn rule_name(&self) -> &'static str {
        match self.rule {
            SequenceRule::Basis { .. } => "basis",
            SequenceRule::StronglyConvergent { .. } => "strongly-convergent",
            SequenceRule::Counterexample { .. } => "counterexample",
            SequenceRule::Custom { .. } => "custom",
        }
    }
}

/// One constructed counterexample term with its checked properties.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CounterexampleTerm {
    /// Index `n`.
    pub n: usize,
    /// `N_n`, least integer with `2^-N_n < 1/n^2`.
    pub terms: usize,
    /// Ambient dimension `d_n`.
    pub dim: usize,
    /// Rank of the pairing matrix of `phi_1..phi_N_n`.
    pub rank: usize,
    /// `u_n`.
    pub u: Element,
    /// `||u_n||_X`.
    pub norm: f64,
    /// `max_{j <= N_n} |<phi_j, u_n>|`.
    pub max_pairing: f64,
    /// Enclosure of `|u_n|_Phi`.
    pub very_weak: CertifiedValue,
}

/// Least `N` with `2^-N < 1/n^2`.
pub fn annihilated_terms(n: usize) -> usize {
    let n2 = (n as f64) * (n as f64);
    let mut big_n = 1usize;
    while libm::ldexp(n2, -(big_n as i32)) >= 1.0 {
        big_n += 1;
    }
    big_n
}

/// Builds `u_n = n xi_n / ||xi_n||` with `xi_n` in the orthogonal complement
/// of `phi_1, ..., phi_N_n` inside `X_{d_n}`, then checks `||u_n|| = n`,
/// the orthogonality and `|u_n|_Phi^hi < 1/n`.
///
/// `xi_n` is the projection of the all-ones vector onto the complement, or
/// the first complement basis vector when that projection vanishes.
pub fn counterexample_term(fam: &DualFamily, n: usize, schedule: DimSchedule) -> Result<CounterexampleTerm> {
    if n == 0 {
        return Err(invalid("n", "index starts at 1"));
    }
    let big_n = annihilated_terms(n);
    let dim = schedule.dim(n, big_n);
    let fam = fam.with_dim(dim)?;
    let rows: Vec<Vec<f64>> = fam.prefix(big_n)?.into_iter().map(|f| f.coeffs().to_vec()).collect();
    let split = linalg::orthogonal_complement(&rows, dim, 1e-12);
    if split.null_space.is_empty() {
        return Err(Error::EmptyComplement {
            rank: split.rank(),
            dim,
        });
    }
    let mut xi = split.project_null(&vec![1.0; dim]);
    if linalg::norm2(&xi) < 1e-8 * libm::sqrt(dim as f64) {
        xi = split.null_space[0].clone();
    }
    let scale = n as f64 / fam.space().eval(&xi);
    let u = Element::new(xi.iter().map(|x| scale * x).collect())?;
    let norm = fam.space().eval(u.coeffs());
    let max_pairing = rows
        .iter()
        .map(|r| libm::fabs(linalg::dot(r, u.coeffs())))
        .fold(0.0, f64::max);
    // Sum a few terms past N_n so the tail majorant is far below 1/n.
    let tol = libm::ldexp(norm, -(big_n as i32 + 10));
    let very_weak = very_weak_norm(&fam, &u, tol)?;
    debug_assert!(terms_for(norm, tol) > big_n);
    if libm::fabs(norm - n as f64) > 1e-10 * n as f64 || !(very_weak.hi < 1.0 / n as f64) || max_pairing > 1e-9 {
        return Err(invalid(
            "counterexample",
            format!(
                "postcondition failed at n = {n}: norm {norm}, |u|^hi {}, max pairing {max_pairing}",
                very_weak.hi
            ),
        ));
    }
    Ok(CounterexampleTerm {
        n,
        terms: big_n,
        dim,
        rank: split.rank(),
        u,
        norm,
        max_pairing,
        very_weak,
    })
}

/// Default probes: the first `enumerated` functionals of the family and
/// `random` seeded functionals with geometrically decaying coefficients,
/// each scaled to dual norm one.
pub fn default_probes(fam: &DualFamily, enumerated: usize, random: usize, seed: u64) -> Result<Vec<Functional>> {
    let mut probes = fam.prefix(enumerated)?;
    for coeffs in decaying_gaussians(fam.dim(), random, seed) {
        let f = Functional::measured(coeffs, fam.space())?;
        let s = f.dual_norm_bound();
        if s > 0.0 {
            probes.push(Functional::measured(
                f.coeffs().iter().map(|c| c / s).collect(),
                fam.space(),
            )?);
        }
    }
    Ok(probes)
}

/// Verdict of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    /// Norm residuals below tolerance on the trailing half.
    Strong,
    /// Bounded, probe residuals below tolerance, norm residuals at least ten
    /// times the tolerance.
    WeakNotStrong,
    /// Very weak residuals below tolerance while the norms grow past
    /// `1/tol`.
    VeryWeakOnly,
    /// Bounded but not convergent in any tested sense.
    BoundedDivergent,
    /// Norms grow past `1/tol`.
    Unbounded,
}

/// Per-`n` residuals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TraceRow {
    /// Index.
    pub n: usize,
    /// `||u_n||`.
    pub norm: f64,
    /// `||u_n - u||`.
    pub strong: f64,
    /// `max_f |<f, u_n - u>|` over the probes.
    pub weak: f64,
    /// Enclosure of `|u_n - u|_Phi`.
    pub very_weak: CertifiedValue,
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModeReport {
    /// Verdict.
    pub verdict: Verdict,
    /// Diagnostics raised while deciding.
    pub flags: Vec<String>,
    /// Classification tolerance.
    pub tol: f64,
    /// Tail tolerance of the very weak enclosures.
    pub very_weak_tol: f64,
    /// Number of terms examined.
    pub horizon: usize,
    /// First index of the trailing half.
    pub trailing_from: usize,
    /// Number of probe functionals.
    pub probes: usize,
    /// `sup_n ||u_n||`.
    pub sup_norm: f64,
    /// `sup_n ||u_n|| <= 1/tol`.
    pub bounded: bool,
    /// Trailing norm residuals below `tol`.
    pub strong_ok: bool,
    /// Trailing probe residuals below `tol`.
    pub weak_ok: bool,
    /// Trailing very weak upper bounds below `tol`.
    pub very_weak_ok: bool,
    /// Per-`n` residuals.
    pub trace: Vec<TraceRow>,
}

fn trace(g: &SequenceGen, fam: &DualFamily, probes: &[Functional], vw_tol: f64) -> Result<(Vec<TraceRow>, DualFamily)> {
    let terms: Vec<Element> = (1..=g.horizon()).map(|n| g.term(n)).collect::<Result<_>>()?;
    let limit = g.limit();
    let dim = terms
        .iter()
        .map(Element::dim)
        .chain(probes.iter().map(|f| f.coeffs().len()))
        .fold(limit.dim(), usize::max);
    let fam = if fam.dim() < dim {
        fam.with_dim(dim)?
    } else {
        fam.clone()
    };
    let space = fam.space();
    let mut rows = Vec::with_capacity(terms.len());
    for (i, u) in terms.iter().enumerate() {
        let diff = u.padded(fam.dim()).sub(&limit);
        let weak = probes.iter().map(|f| libm::fabs(f.pair(&diff))).fold(0.0, f64::max);
        rows.push(TraceRow {
            n: i + 1,
            norm: space.eval(&u.padded(fam.dim()).into_coeffs()),
            strong: space.eval(diff.coeffs()),
            weak,
            very_weak: very_weak_norm(&fam, &diff, vw_tol)?,
        });
    }
    Ok((rows, fam))
}

/// Classifies the convergence mode of `g` towards its candidate limit.
///
/// With `T` the trailing half `n > horizon/2`: strong when the norm residual
/// stays below `tol` on `T`; weak-not-strong when the sequence is bounded
/// (`sup ||u_n|| <= 1/tol`), all probe residuals are below `tol` on `T` and
/// the norm residual stays at least `10 tol`; very-weak-only when the upper
/// very weak bounds are below `tol` on `T` while `||u_n||` exceeds `1/tol`
/// there; otherwise bounded-divergent or unbounded. Very weak enclosures use
/// tail tolerance `tol / 8`.
pub fn classify(g: &SequenceGen, fam: &DualFamily, probes: &[Functional], tol: f64) -> Result<ModeReport> {
    if g.horizon() < 8 {
        return Err(invalid("horizon", "classification needs at least 8 terms"));
    }
    if probes.is_empty() {
        return Err(invalid("probes", "at least one probe functional is required"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let vw_tol = tol / 8.0;
    let (rows, _) = trace(g, fam, probes, vw_tol)?;
    let from = g.horizon() / 2 + 1;
    let tail = &rows[from - 1..];
    let max = |f: &dyn Fn(&TraceRow) -> f64| tail.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let min = |f: &dyn Fn(&TraceRow) -> f64| tail.iter().map(f).fold(f64::INFINITY, f64::min);

    let sup_norm = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
    let bounded = sup_norm <= 1.0 / tol;
    let strong_ok = max(&|r| r.strong) < tol;
    let weak_ok = max(&|r| r.weak) < tol;
    let very_weak_ok = max(&|r| r.very_weak.hi) < tol;
    let mut flags = Vec::new();

    let verdict = if strong_ok && weak_ok && very_weak_ok {
        Verdict::Strong
    } else {
        if strong_ok {
            flags.push(String::from("strong-residual-small-but-weaker-modes-not"));
        }
        if bounded && weak_ok && min(&|r| r.strong) >= 10.0 * tol {
            Verdict::WeakNotStrong
        } else if very_weak_ok && max(&|r| r.norm) > 1.0 / tol {
            Verdict::VeryWeakOnly
        } else {
            if bounded && weak_ok {
                flags.push(String::from("strong-residual-between-tol-and-10tol"));
            }
            if bounded {
                Verdict::BoundedDivergent
            } else {
                Verdict::Unbounded
            }
        }
    };
    if bounded && weak_ok != very_weak_ok {
        flags.push(String::from("probe-and-very-weak-residuals-disagree"));
    }
    Ok(ModeReport {
        verdict,
        flags,
        tol,
        very_weak_tol: vw_tol,
        horizon: g.horizon(),
        trailing_from: from,
        probes: probes.len(),
        sup_norm,
        bounded,
        strong_ok,
        weak_ok,
        very_weak_ok,
        trace: rows,
    })
}

/// Per-`n` check of the chain: norm convergence implies probe convergence
/// implies very weak convergence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ImplicationReport {
    /// Tolerance.
    pub tol: f64,
    /// Largest dual norm among the probes.
    pub max_probe_norm: f64,
    /// Residual traces.
    pub trace: Vec<TraceRow>,
    /// Indices `n` where a small norm residual did not force small weaker
    /// residuals. Any entry is a bug.
    pub violations: Vec<usize>,
    /// Trailing-half maxima `(strong, weak, very weak upper)`.
    pub trailing_max: (f64, f64, f64),
}

impl ImplicationReport {
    /// True when no violation was found.
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks at every `n` that `||u_n - u|| < tol` implies probe residuals
/// below `tol (1 + max probe norm)` and `|u_n - u|_Phi^hi < tol`.
pub fn implication_suite(
    g: &SequenceGen,
    fam: &DualFamily,
    probes: &[Functional],
    tol: f64,
) -> Result<ImplicationReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let (rows, fam) = trace(g, fam, probes, tol / 8.0)?;
    let max_probe_norm = probes
        .iter()
        .map(|f| fam.space().dual_norm(f))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let violations = rows
        .iter()
        .filter(|r| r.strong < tol && (r.weak >= tol * (1.0 + max_probe_norm) || r.very_weak.hi >= tol))
        .map(|r| r.n)
        .collect();
    let from = g.horizon() / 2;
    let tail = &rows[from..];
    let tmax = |f: fn(&TraceRow) -> f64| tail.iter().map(f).fold(0.0, f64::max);
    Ok(ImplicationReport {
        tol,
        max_probe_norm,
        trailing_max: (tmax(|r| r.strong), tmax(|r| r.weak), tmax(|r| r.very_weak.hi)),
        trace: rows,
        violations,
    })
}
