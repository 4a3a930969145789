//! Library objects from scenario configuration. Every error names the JSON
//! pointer of the value that caused it.

use std::path::Path;

use ehrling_core::convergence::{DimSchedule, SequenceGen};
use ehrling_core::ehrling::{Gauge, Sampler};
use ehrling_core::linalg::Matrix;
use ehrling_core::operators::LinearOperator;
use ehrling_core::optimize::OptimizerSettings;
use ehrling_core::{DualFamily, Element, FamilyMode, NormSpec};

use crate::error::LabError;
use crate::scenario::{
    ModeConfig, OperatorConfig, OptimizerConfig, SamplerConfig, Scenario, ScheduleConfig, SecondConfig, SequenceConfig,
    SpaceConfig,
};

type Result<T> = std::result::Result<T, LabError>;

fn core<T>(at: &str, r: ehrling_core::Result<T>) -> Result<T> {
    r.map_err(|e| LabError::at(at, e))
}

/// Strong norm.
pub fn space(cfg: &SpaceConfig, at: &str) -> Result<NormSpec> {
    match cfg {
        SpaceConfig::Lp { p } => core(&format!("{at}/lp/p"), NormSpec::lp(p.value())),
        SpaceConfig::WeightedLp { p, weights } => core(
            &format!("{at}/weighted-lp"),
            NormSpec::weighted_lp(p.value(), weights.clone()),
        ),
        SpaceConfig::SobolevH1 { h } => core(&format!("{at}/sobolev-h1/h"), NormSpec::sobolev_h1(*h)),
    }
}

/// Dual family of the scenario in dimension `family.dim`, else `dim`.
pub fn family(sc: &Scenario, dim: usize) -> Result<DualFamily> {
    let mode = match sc.family.mode {
        ModeConfig::Coordinate => FamilyMode::Coordinate,
        ModeConfig::DenseRational => FamilyMode::DenseRational,
    };
    if !(sc.family.tolerance > 0.0 && sc.family.tolerance.is_finite()) {
        return Err(LabError::at("/family/tolerance", "must be positive"));
    }
    let dim = sc.family.dim.unwrap_or(dim);
    core("/family", DualFamily::new(mode, space(&sc.space, "/space")?, dim))
}

/// Truncation dimension used when a scenario gives none.
pub const DEFAULT_DIM: usize = 16;

fn scenario_dim(sc: &Scenario) -> Result<usize> {
    match sc.dim {
        Some(0) => Err(LabError::at("/dim", "must be positive")),
        d => Ok(d.unwrap_or(DEFAULT_DIM)),
    }
}

fn norms(
    sc: &Scenario,
    domain: &Option<SpaceConfig>,
    codomain: &Option<SpaceConfig>,
    at: &str,
) -> Result<(NormSpec, NormSpec)> {
    let pick = |c: &Option<SpaceConfig>, field: &str| match c {
        Some(c) => space(c, &format!("{at}/{field}")),
        None => space(&sc.space, "/space"),
    };
    Ok((pick(domain, "domain")?, pick(codomain, "codomain")?))
}

fn rows_matrix(rows: &[Vec<f64>], at: &str) -> Result<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(LabError::at(at, "matrix must have at least one entry"));
    }
    Matrix::from_rows(rows).ok_or_else(|| LabError::at(at, "rows have different lengths"))
}

fn read_csv_grid(path: &Path, at: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| LabError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| LabError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    LabError::at(
                        at,
                        format!(
                            "{}: row {} column {}: `{field}` is not a number",
                            path.display(),
                            i + 1,
                            j + 1
                        ),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Operator described by `cfg`, found at `at` in the scenario. Kernel CSV
/// paths are resolved against `base_dir`.
pub fn operator(cfg: &OperatorConfig, sc: &Scenario, base_dir: &Path, at: &str) -> Result<LinearOperator> {
    match cfg {
        OperatorConfig::Diagonal {
            lambda,
            domain,
            codomain,
        } => {
            let at = format!("{at}/diagonal");
            let (x, y) = norms(sc, domain, codomain, &at)?;
            if lambda.is_empty() {
                return Err(LabError::at(format!("{at}/lambda"), "needs at least one entry"));
            }
            core(&at, LinearOperator::diagonal(lambda.clone(), x, y))
        }
        OperatorConfig::GeometricDiagonal {
            first,
            ratio,
            domain,
            codomain,
        } => {
            let at = format!("{at}/geometric-diagonal");
            let d = scenario_dim(sc)?;
            let (x, y) = norms(sc, domain, codomain, &at)?;
            let lambda = (0..d).map(|k| first * ratio.powi(k as i32)).collect();
            core(&at, LinearOperator::diagonal(lambda, x, y))
        }
        OperatorConfig::Identity { domain, codomain } => {
            let at = format!("{at}/identity");
            let d = scenario_dim(sc)?;
            let (x, y) = norms(sc, domain, codomain, &at)?;
            core(&at, LinearOperator::identity(d, x, y))
        }
        OperatorConfig::Zero {} => core(&format!("{at}/zero"), LinearOperator::zero(scenario_dim(sc)?)),
        OperatorConfig::Shift { domain, codomain } => {
            let at = format!("{at}/shift");
            let d = scenario_dim(sc)?;
            let (x, y) = norms(sc, domain, codomain, &at)?;
            core(&at, LinearOperator::shift(d, x, y))
        }
        OperatorConfig::Dense { rows, domain, codomain } => {
            let at = format!("{at}/dense");
            let m = rows_matrix(rows, &format!("{at}/rows"))?;
            let (x, y) = norms(sc, domain, codomain, &at)?;
            core(&at, LinearOperator::dense(m, x, y))
        }
        OperatorConfig::Kernel {
            h,
            samples,
            csv,
            domain,
            codomain,
        } => {
            let at = format!("{at}/kernel");
            let rows = match (samples, csv) {
                (Some(rows), None) => rows.clone(),
                (None, Some(file)) => read_csv_grid(&base_dir.join(file), &format!("{at}/csv"))?,
                _ => return Err(LabError::at(&at, "give exactly one of `samples` and `csv`")),
            };
            let m = rows_matrix(&rows, &format!("{at}/samples"))?;
            let (x, y) = norms(sc, domain, codomain, &at)?;
            core(&at, LinearOperator::kernel(m, *h, x, y))
        }
        OperatorConfig::SobolevEmbedding { h } => {
            let at = format!("{at}/sobolev-embedding");
            core(&at, LinearOperator::sobolev_embedding(scenario_dim(sc)?, *h))
        }
        OperatorConfig::Compose { outer, inner } => {
            let at = format!("{at}/compose");
            let o = operator(outer, sc, base_dir, &format!("{at}/outer"))?;
            let i = operator(inner, sc, base_dir, &format!("{at}/inner"))?;
            core(&at, LinearOperator::compose(&o, &i))
        }
    }
}

/// The scenario's `operator`, required by the job.
pub fn main_operator(sc: &Scenario, base_dir: &Path) -> Result<LinearOperator> {
    let cfg = sc
        .operator
        .as_ref()
        .ok_or_else(|| LabError::at("/operator", format!("required by {} jobs", sc.job.name())))?;
    operator(cfg, sc, base_dir, "/operator")
}

/// Gauge multiplied by `C`, on elements of dimension `dim`.
pub fn second(sc: &Scenario, dim: usize) -> Result<Gauge> {
    match &sc.second {
        SecondConfig::VeryWeak => {
            let fam = family(sc, dim)?;
            let vw = core("/family", NormSpec::very_weak(fam, sc.family.tolerance))?;
            Ok(Gauge::Norm(vw))
        }
        SecondConfig::Norm(cfg) => {
            let n = space(cfg, "/second/norm")?;
            core("/second/norm", n.check_dim(dim))?;
            Ok(Gauge::Norm(n))
        }
    }
}

/// Dimension schedule.
pub fn schedule(cfg: ScheduleConfig) -> DimSchedule {
    match cfg {
        ScheduleConfig::Margin(m) => DimSchedule::Margin(m),
        ScheduleConfig::Fixed(d) => DimSchedule::Fixed(d),
    }
}

fn element(v: &[f64], at: &str) -> Result<Element> {
    if v.is_empty() {
        return Err(LabError::at(at, "needs at least one coefficient"));
    }
    core(at, Element::new(v.to_vec()))
}

/// The classify sequence and the dimension it needs.
pub fn sequence(sc: &Scenario, fam: &DualFamily) -> Result<SequenceGen> {
    let cfg = sc
        .sequence
        .as_ref()
        .ok_or_else(|| LabError::at("/sequence", "required by classify jobs"))?;
    match cfg {
        SequenceConfig::Basis { dim, horizon } => {
            core("/sequence/basis", SequenceGen::basis(*dim, horizon.unwrap_or(*dim)))
        }
        SequenceConfig::StronglyConvergent { target, rate, horizon } => {
            let at = "/sequence/strongly-convergent";
            let target = element(target, &format!("{at}/target"))?;
            core(at, SequenceGen::strongly_convergent(target, *rate, *horizon))
        }
        SequenceConfig::Counterexample { horizon, schedule: s } => core(
            "/sequence/counterexample",
            SequenceGen::counterexample(fam.clone(), schedule(*s), *horizon),
        ),
        SequenceConfig::Custom { terms, limit } => {
            let at = "/sequence/custom";
            let terms = terms
                .iter()
                .enumerate()
                .map(|(i, t)| element(t, &format!("{at}/terms/{i}")))
                .collect::<Result<Vec<_>>>()?;
            let limit = limit.as_ref().map(|l| element(l, &format!("{at}/limit"))).transpose()?;
            core(at, SequenceGen::custom(terms, limit))
        }
    }
}

/// Largest dimension mentioned by the classify sequence.
pub fn sequence_dim(sc: &Scenario) -> usize {
    match &sc.sequence {
        Some(SequenceConfig::Basis { dim, .. }) => *dim,
        Some(SequenceConfig::StronglyConvergent { target, .. }) => target.len(),
        Some(SequenceConfig::Custom { terms, limit }) => {
            terms.iter().chain(limit.iter()).map(Vec::len).max().unwrap_or(1)
        }
        Some(SequenceConfig::Counterexample { .. }) | None => 1,
    }
    .max(1)
}

/// Optimizer settings.
pub fn optimizer(cfg: &OptimizerConfig) -> Result<OptimizerSettings> {
    if !(cfg.bisection_rel_width > 0.0 && cfg.bisection_rel_width < 1.0) {
        return Err(LabError::at("/optimizer/bisection_rel_width", "must lie in (0, 1)"));
    }
    if !(cfg.delta_floor_rel > 0.0 && cfg.delta_floor_rel < 1.0) {
        return Err(LabError::at("/optimizer/delta_floor_rel", "must lie in (0, 1)"));
    }
    Ok(OptimizerSettings {
        starts: cfg.starts,
        iterations: cfg.iterations,
        polish: cfg.polish,
        seed: cfg.seed,
        bisection_rel_width: cfg.bisection_rel_width,
        delta_floor_rel: cfg.delta_floor_rel,
        safety_rounds: cfg.safety_rounds,
    })
}

/// Verification points.
pub fn sampler(cfg: &SamplerConfig) -> Sampler {
    Sampler {
        samples: cfg.samples,
        seed: cfg.seed,
        basis: cfg.basis,
        adversarial: cfg.adversarial,
        extra: Vec::new(),
    }
}
