//! The seven jobs. Configuration problems are returned as errors; numerical
//! failures of the library become part of the job result.

use std::path::Path;

use ehrling_core::convergence::{self, classify, counterexample_term, default_probes, implication_suite};
use ehrling_core::ehrling::{
    self, EhrlingCertificate, EhrlingProblem, FalsifyOutcome, FalsifySettings, Method, Verdict, DEFAULT_EPS_GRID,
};
use ehrling_core::veryweak::very_weak_norm;
use ehrling_core::{Element, Error};
use serde_json::{json, Value};

use crate::build;
use crate::error::LabError;
use crate::report::{fmt_f64, Status, Table};
use crate::scenario::{Job, Scenario};

type Result<T> = std::result::Result<T, LabError>;

/// What a job produced.
#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    /// Outcome class.
    pub status: Status,
    /// Report `result` member.
    pub result: Value,
    /// CSV tables.
    pub tables: Vec<Table>,
    /// Remarks for the diagnostics section.
    pub notes: Vec<String>,
}

impl JobOutput {
    fn new(status: Status, result: Value, tables: Vec<Table>) -> Self {
        Self {
            status,
            result,
            tables,
            notes: Vec::new(),
        }
    }
}

/// Runs the scenario's job.
pub fn run_job(sc: &Scenario, base_dir: &Path) -> Result<JobOutput> {
    match sc.job {
        Job::Norm => norm(sc),
        Job::Certify => certify(sc, base_dir),
        Job::Reverse => reverse(sc, base_dir),
        Job::ThreeSpace => three_space(sc, base_dir),
        Job::Falsify => falsify(sc, base_dir),
        Job::Classify => classify_job(sc),
        Job::Counterexample => counterexample(sc),
    }
}

fn numerical(module: &str, e: Error) -> JobOutput {
    let status = match e {
        Error::NoModulus { .. } => Status::Falsified,
        _ => Status::Error,
    };
    let detail = match &e {
        Error::NoModulus {
            eps,
            delta_floor,
            value,
        } => {
            json!({"kind": "no-modulus", "eps": eps, "delta_floor": delta_floor, "value": value})
        }
        Error::NotInjective {
            smallest_singular_value,
        } => {
            json!({"kind": "not-injective", "smallest_singular_value": smallest_singular_value})
        }
        Error::EmptyComplement { rank, dim } => json!({"kind": "empty-complement", "rank": rank, "dim": dim}),
        Error::DimensionMismatch { expected, found } => {
            json!({"kind": "dimension-mismatch", "expected": expected, "found": found})
        }
        Error::NonFinite { index } => json!({"kind": "non-finite", "index": index}),
        Error::InvalidParameter { name, .. } => json!({"kind": "invalid-parameter", "name": name}),
        Error::UnsupportedNorm { operation, kind } => {
            json!({"kind": "unsupported-norm", "operation": operation, "norm": kind})
        }
        Error::OutOfRange { index, horizon } => json!({"kind": "out-of-range", "index": index, "horizon": horizon}),
    };
    let mut detail = detail;
    detail["module"] = json!(module);
    detail["message"] = json!(e.to_string());
    JobOutput::new(status, json!({ "error": detail }), Vec::new())
}

fn eps_grid(sc: &Scenario, default: &[f64]) -> Result<Vec<f64>> {
    let grid = sc.params.eps.clone().unwrap_or_else(|| default.to_vec());
    if grid.is_empty() {
        return Err(LabError::at("/params/eps", "needs at least one value"));
    }
    if let Some(i) = grid.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(LabError::at(format!("/params/eps/{i}"), "must be positive"));
    }
    Ok(grid)
}

fn verdict_status(verdicts: impl IntoIterator<Item = Verdict>) -> Status {
    verdicts.into_iter().fold(Status::Completed, |s, v| {
        s.worst(match v {
            Verdict::Pass => Status::Completed,
            Verdict::Fail => Status::Falsified,
            Verdict::Inconclusive => Status::Inconclusive,
        })
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

fn norm(sc: &Scenario) -> Result<JobOutput> {
    let u = sc
        .params
        .u
        .as_ref()
        .filter(|u| !u.is_empty())
        .ok_or_else(|| LabError::at("/params/u", "norm jobs need a nonempty element"))?;
    let fam = build::family(sc, sc.dim.unwrap_or(u.len()).max(u.len()))?;
    let el = Element::new(u.clone()).map_err(|e| LabError::at("/params/u", e))?;
    let tol = sc.family.tolerance;
    let v = match very_weak_norm(&fam, &el, tol) {
        Ok(v) => v,
        Err(e) => return Ok(numerical("veryweak", e)),
    };
    let strong = fam.space().eval(&el.padded(fam.dim()).into_coeffs());
    let mut t = Table::new("norm", &["lo", "hi", "terms_used", "strong_norm"]);
    t.push(vec![f(v.lo), f(v.hi), v.terms_used.to_string(), f(strong)]);
    Ok(JobOutput::new(
        Status::Completed,
        json!({
            "family": {"mode": fam.mode().label(), "dim": fam.dim(), "space": fam.space().label()},
            "tolerance": tol,
            "very_weak": v,
            "strong_norm": strong,
        }),
        vec![t],
    ))
}

fn certificate_table(cert: &EhrlingCertificate) -> Table {
    let mut t = Table::new(
        "certificate",
        &[
            "eps",
            "delta",
            "c",
            "c_optimal",
            "method",
            "residual",
            "verdict",
            "saturated",
        ],
    );
    for r in &cert.rows {
        t.push(vec![
            f(r.eps),
            f(r.delta),
            f(r.c),
            f(r.c_optimal),
            String::from(match r.method {
                Method::Modulus => "modulus",
                Method::Optimal => "optimal",
            }),
            f(r.residual),
            verdict_name(r.verdict).to_string(),
            r.saturated.to_string(),
        ]);
    }
    t
}

fn certificate_output(cert: EhrlingCertificate) -> JobOutput {
    let status = verdict_status(cert.rows.iter().map(|r| r.verdict));
    let mut out = JobOutput::new(
        status,
        json!({ "all_pass": cert.all_pass(), "certificate": cert }),
        vec![certificate_table(&cert)],
    );
    let saturated: Vec<String> = cert.rows.iter().filter(|r| r.saturated).map(|r| f(r.eps)).collect();
    if !saturated.is_empty() {
        out.notes.push(format!(
            "modulus search saturated at eps = {}: the target never exceeds eps on the search region",
            saturated.join(", ")
        ));
    }
    out
}

fn certify(sc: &Scenario, base_dir: &Path) -> Result<JobOutput> {
    let t = build::main_operator(sc, base_dir)?;
    let norm2 = build::second(sc, t.domain_dim())?;
    let grid = eps_grid(sc, &DEFAULT_EPS_GRID)?;
    let opt = build::optimizer(&sc.optimizer)?;
    let sampler = build::sampler(&sc.sampler);
    Ok(match ehrling::certify(&t, t.domain(), &norm2, &grid, &sampler, &opt) {
        Ok(cert) => certificate_output(cert),
        Err(e) => numerical("ehrling", e),
    })
}

fn three_space(sc: &Scenario, base_dir: &Path) -> Result<JobOutput> {
    let theta = build::main_operator(sc, base_dir)?;
    let tau_cfg = sc
        .tau
        .as_ref()
        .ok_or_else(|| LabError::at("/tau", "required by three-space jobs"))?;
    let tau = build::operator(tau_cfg, sc, base_dir, "/tau")?;
    if tau.domain_dim() != theta.codomain_dim() {
        return Err(LabError::at(
            "/tau",
            format!(
                "domain dimension {} differs from the codomain dimension {} of the operator",
                tau.domain_dim(),
                theta.codomain_dim()
            ),
        ));
    }
    let grid = eps_grid(sc, &DEFAULT_EPS_GRID)?;
    let opt = build::optimizer(&sc.optimizer)?;
    let sampler = build::sampler(&sc.sampler);
    Ok(
        match ehrling::three_space_certificate(&theta, &tau, &grid, &sampler, &opt) {
            Ok(cert) => certificate_output(cert),
            Err(e) => numerical("ehrling", e),
        },
    )
}

fn reverse(sc: &Scenario, base_dir: &Path) -> Result<JobOutput> {
    let t = build::main_operator(sc, base_dir)?;
    let fam = build::family(sc, t.domain_dim())?;
    let grid = eps_grid(sc, &[0.25, 0.1])?;
    let opt = build::optimizer(&sc.optimizer)?;
    let sampler = build::sampler(&sc.sampler);
    let tol = sc.family.tolerance;
    let mut rows = Vec::new();
    let mut table = Table::new(
        "reverse",
        &["eps", "delta", "c", "smallest_singular_value", "residual", "verdict"],
    );
    let mut status = Status::Completed;
    for &eps in &grid {
        let step = ehrling::reverse_certificate(&t, &fam, eps, tol, &opt).and_then(|rc| {
            let check = EhrlingProblem::reverse(&t, &fam, tol)?.verify(eps, rc.c, &sampler, &opt)?;
            Ok((rc, check))
        });
        let (rc, check) = match step {
            Ok(x) => x,
            Err(e) => return Ok(numerical("ehrling", e)),
        };
        status = status.worst(verdict_status([check.verdict]));
        table.push(vec![
            f(eps),
            f(rc.delta),
            f(rc.c),
            f(rc.smallest_singular_value),
            f(check.residual),
            verdict_name(check.verdict).to_string(),
        ]);
        rows.push(json!({"certificate": rc, "verification": check}));
    }
    Ok(JobOutput::new(status, json!({ "rows": rows }), vec![table]))
}

fn falsify(sc: &Scenario, base_dir: &Path) -> Result<JobOutput> {
    let t = build::main_operator(sc, base_dir)?;
    let fam = build::family(sc, t.domain_dim())?;
    let grid = eps_grid(sc, &[0.5])?;
    let c_max = sc.params.c_max;
    if !(c_max.is_finite() && c_max > 0.0) {
        return Err(LabError::at("/params/c_max", "must be positive"));
    }
    let settings = FalsifySettings {
        tolerance: sc.family.tolerance,
        basis_depth: sc.params.basis_depth.unwrap_or(usize::MAX),
        optimizer: build::optimizer(&sc.optimizer)?,
    };
    let mut table = Table::new(
        "falsify",
        &["eps", "c_max", "outcome", "ratio", "basis_index", "residual"],
    );
    let mut rows = Vec::new();
    let mut status = Status::Completed;
    for &eps in &grid {
        let out = match ehrling::falsify(&t, t.domain(), &fam, eps, c_max, &settings) {
            Ok(o) => o,
            Err(e) => return Ok(numerical("ehrling", e)),
        };
        match &out {
            FalsifyOutcome::Witness(w) => {
                status = status.worst(Status::Falsified);
                table.push(vec![
                    f(eps),
                    f(c_max),
                    String::from("witness"),
                    f(w.lower_bound_on_c),
                    w.basis_index.map(|n| n.to_string()).unwrap_or_default(),
                    f(w.residual),
                ]);
            }
            FalsifyOutcome::NotFound { best_ratio, .. } => {
                status = status.worst(Status::Inconclusive);
                table.push(vec![
                    f(eps),
                    f(c_max),
                    String::from("not-found"),
                    f(*best_ratio),
                    String::new(),
                    String::new(),
                ]);
            }
        }
        rows.push(json!({"eps": eps, "c_max": c_max, "result": out}));
    }
    let mut output = JobOutput::new(status, json!({ "rows": rows }), vec![table]);
    if status == Status::Inconclusive {
        output.notes.push(String::from(
            "no witness within the budget; this does not certify the inequality",
        ));
    }
    Ok(output)
}

fn classify_job(sc: &Scenario) -> Result<JobOutput> {
    let tol = sc.params.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(LabError::at("/params/tol", "must be positive"));
    }
    let fam = build::family(sc, sc.dim.unwrap_or(1).max(build::sequence_dim(sc)))?;
    let g = build::sequence(sc, &fam)?;
    let p = &sc.params.probes;
    if p.enumerated + p.random == 0 {
        return Err(LabError::at("/params/probes", "at least one probe is required"));
    }
    let probes = default_probes(&fam, p.enumerated, p.random, p.seed).map_err(|e| LabError::at("/params/probes", e))?;
    let (mode, chain) =
        match classify(&g, &fam, &probes, tol).and_then(|m| Ok((m, implication_suite(&g, &fam, &probes, tol)?))) {
            Ok(x) => x,
            Err(Error::InvalidParameter {
                name: "horizon",
                reason,
            }) => {
                return Err(LabError::at("/sequence", reason));
            }
            Err(e) => return Ok(numerical("convergence", e)),
        };
    let mut table = Table::new(
        "trace",
        &["n", "norm", "strong", "weak", "very_weak_lo", "very_weak_hi"],
    );
    for r in &mode.trace {
        table.push(vec![
            r.n.to_string(),
            f(r.norm),
            f(r.strong),
            f(r.weak),
            f(r.very_weak.lo),
            f(r.very_weak.hi),
        ]);
    }
    let mut out = JobOutput::new(
        if chain.consistent() {
            Status::Completed
        } else {
            Status::Error
        },
        json!({
            "rule": g.rule_name(),
            "mode": mode,
            "implication": {
                "consistent": chain.consistent(),
                "violations": chain.violations,
                "max_probe_norm": chain.max_probe_norm,
                "trailing_max": {
                    "strong": chain.trailing_max.0,
                    "weak": chain.trailing_max.1,
                    "very_weak": chain.trailing_max.2,
                },
            },
        }),
        vec![table],
    );
    out.notes.push(String::from(
        "weak convergence is tested against finitely many probe functionals only",
    ));
    out.notes.extend(mode.flags.iter().cloned());
    Ok(out)
}

fn counterexample(sc: &Scenario) -> Result<JobOutput> {
    let ns = sc.params.n.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16]);
    if ns.is_empty() {
        return Err(LabError::at("/params/n", "needs at least one index"));
    }
    if let Some(i) = ns.iter().position(|n| *n == 0) {
        return Err(LabError::at(format!("/params/n/{i}"), "indices start at 1"));
    }
    let fam = build::family(sc, sc.dim.unwrap_or(1))?;
    let schedule = build::schedule(sc.params.schedule);
    let mut table = Table::new(
        "counterexample",
        &[
            "n",
            "terms",
            "dim",
            "rank",
            "norm",
            "max_pairing",
            "very_weak_lo",
            "very_weak_hi",
        ],
    );
    let mut terms = Vec::new();
    for &n in &ns {
        let t = match counterexample_term(&fam, n, schedule) {
            Ok(t) => t,
            Err(e) => return Ok(numerical("convergence", e)),
        };
        table.push(vec![
            n.to_string(),
            t.terms.to_string(),
            t.dim.to_string(),
            t.rank.to_string(),
            f(t.norm),
            f(t.max_pairing),
            f(t.very_weak.lo),
            f(t.very_weak.hi),
        ]);
        terms.push(t);
    }
    Ok(JobOutput::new(
        Status::Completed,
        json!({ "schedule": schedule_json(schedule), "terms": terms }),
        vec![table],
    ))
}

fn schedule_json(s: convergence::DimSchedule) -> Value {
    serde_json::to_value(s).expect("schedules serialize")
}
