//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or exceeds its time limit.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use ehrling_core::convergence::{
    annihilated_terms, classify, counterexample_term, default_probes, DimSchedule, SequenceGen, Verdict as Mode,
};
use ehrling_core::ehrling::{self, EhrlingProblem, FalsifyOutcome, FalsifySettings, Gauge, Sampler, Verdict};
use ehrling_core::linalg;
use ehrling_core::operators::LinearOperator;
use ehrling_core::optimize::OptimizerSettings;
use ehrling_core::veryweak::{tail_bound, very_weak_norm};
use ehrling_core::{DualFamily, Element, NormSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = Result<String, String>;

/// Name, time limit in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn l2() -> NormSpec {
    NormSpec::l2()
}

fn coordinate_vw(d: usize) -> Gauge {
    Gauge::Norm(NormSpec::very_weak(DualFamily::coordinate_l2(d).unwrap(), 1e-15).unwrap())
}

fn diagonal(lambda: Vec<f64>) -> LinearOperator {
    LinearOperator::diagonal(lambda, l2(), l2()).unwrap()
}

fn halving(d: usize) -> LinearOperator {
    diagonal((0..d).map(|k| 0.5f64.powi(k as i32)).collect())
}

fn sampler(samples: usize) -> Sampler {
    Sampler {
        samples,
        ..Sampler::default()
    }
}

fn domination() -> Check {
    let d = 32;
    let fam = DualFamily::dense_l2(d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let u: Vec<f64> = gaussian(&mut rng, d).into_iter().map(|x| x * scale).collect();
        let norm = linalg::norm2(&u);
        let v = very_weak_norm(&fam, &Element::new(u).unwrap(), 1e-12).unwrap();
        worst = worst.max(v.hi - norm);
        ensure!(v.hi <= norm + 1e-8, "hi {} exceeds norm {norm}", v.hi);
    }
    Ok(format!("max(hi - norm) = {worst:.3e} over 10^4 elements"))
}

fn tail_soundness() -> Check {
    let d = 32;
    let fam = DualFamily::dense_l2(d).unwrap();
    let phis = fam.prefix(16 + 40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let g = gaussian(&mut rng, d);
        let r = rng.random_range(0.0..8.0) / linalg::norm2(&g);
        let u: Vec<f64> = g.into_iter().map(|x| x * r).collect();
        for m in [4usize, 8, 16] {
            let tail: f64 = (m + 1..=m + 40)
                .map(|k| linalg::dot(phis[k - 1].coeffs(), &u).abs() * 2f64.powi(-(k as i32)))
                .sum();
            let bound = tail_bound(m, 8.0);
            worst = worst.max(tail / bound);
            ensure!(tail <= bound, "M={m}: tail {tail} > bound {bound}");
        }
    }
    Ok(format!("max tail / bound = {worst:.4}"))
}

fn mode_equivalence() -> Check {
    let tol = 1e-3;
    let fam = DualFamily::dense_l2(64).unwrap();
    let probes = default_probes(&fam, 32, 32, 0).unwrap();
    let basis = SequenceGen::basis(64, 64).unwrap();
    let target = Element::new(vec![0.3, -0.2, 0.1, 0.0, 0.5, 0.0, 0.0, 0.25]).unwrap();
    let strong = SequenceGen::strongly_convergent(target, 0.5, 40).unwrap();
    // e_1 + e_n: bounded, neither weakly nor very weakly null.
    let stuck = SequenceGen::custom(
        (1..=48)
            .map(|n| {
                let mut v = vec![0.0; 48];
                v[0] += 1.0;
                v[n - 1] += 1.0;
                Element::new(v).unwrap()
            })
            .collect(),
        None,
    )
    .unwrap();

    let b = classify(&basis, &fam, &probes, tol).unwrap();
    ensure!(b.verdict == Mode::WeakNotStrong, "basis: {:?} {:?}", b.verdict, b.flags);
    let s = classify(&strong, &fam, &probes, tol).unwrap();
    ensure!(s.verdict == Mode::Strong, "strong: {:?}", s.verdict);
    let k = classify(&stuck, &fam, &probes, tol).unwrap();
    for (name, r) in [("basis", &b), ("strong", &s), ("stuck", &k)] {
        ensure!(r.bounded, "{name} not bounded");
        ensure!(
            r.weak_ok == r.very_weak_ok,
            "{name}: probe {} vs very weak {}",
            r.weak_ok,
            r.very_weak_ok
        );
    }
    ensure!(b.weak_ok && s.weak_ok && !k.weak_ok, "unexpected probe verdicts");
    Ok(String::from(
        "basis weak-not-strong, strong, stuck sequence divergent in both senses",
    ))
}

fn constructive_certificate() -> Check {
    let d = 16;
    let t = halving(d);
    let vw = coordinate_vw(d);
    let grid = ehrling::DEFAULT_EPS_GRID;
    let cert = ehrling::certify(&t, &l2(), &vw, &grid, &sampler(10_000), &OptimizerSettings::default()).unwrap();
    ensure!(cert.rows.len() == 5, "{} rows", cert.rows.len());
    let p = EhrlingProblem::forward(&t, &l2(), &vw).unwrap();
    for row in &cert.rows {
        ensure!(
            row.verdict == Verdict::Pass && row.residual <= 1e-8,
            "eps {}: {:?}",
            row.eps,
            row
        );
        for k in 1..=d {
            let e = Element::basis(d, k).unwrap();
            let r = p.residual_bracket(e.coeffs(), row.eps, row.c).1;
            ensure!(r <= 1e-8, "eps {} basis {k}: residual {r}", row.eps);
        }
    }
    for w in cert.rows.windows(2) {
        ensure!(w[0].eps > w[1].eps, "rows not descending in eps");
        ensure!(w[1].c >= w[0].c - 1e-8, "C drops from {} to {}", w[0].c, w[1].c);
    }
    let cs: Vec<String> = cert.rows.iter().map(|r| format!("{:.4}", r.c)).collect();
    Ok(format!("C = [{}]", cs.join(", ")))
}

/// `m x m` points on each face of the cube `[-1, 1]^3`.
fn cube_surface(m: usize) -> Vec<[f64; 3]> {
    let t: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
    let mut out = Vec::with_capacity(6 * m * m);
    for axis in 0..3 {
        for s in [-1.0, 1.0] {
            for &a in &t {
                for &b in &t {
                    let mut p = [0.0; 3];
                    p[axis] = s;
                    p[(axis + 1) % 3] = a;
                    p[(axis + 2) % 3] = b;
                    out.push(p);
                }
            }
        }
    }
    out
}

fn oracle_agreement() -> Check {
    let lambda = [1.0, 0.5, 0.25];
    let points = cube_surface(409);
    ensure!(points.len() >= 1_000_000, "{} grid points", points.len());
    let t = diagonal(lambda.to_vec());
    let vw = coordinate_vw(3);
    let mut notes = Vec::new();
    for eps in [0.5, 0.25] {
        let oracle = points
            .iter()
            .map(|p| {
                let tu = (0..3).map(|i| (lambda[i] * p[i]).powi(2)).sum::<f64>().sqrt();
                let x = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let weak: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v.abs() * 0.5f64.powi(i as i32 + 1))
                    .sum();
                (tu - eps * x) / weak
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = ehrling::optimal_constant(&t, &l2(), &vw, eps, &OptimizerSettings::default()).unwrap();
        let rel = (got.value - oracle).abs() / oracle;
        ensure!(rel < 0.01, "eps {eps}: optimizer {} vs oracle {oracle}", got.value);
        notes.push(format!("eps {eps}: {:.6} vs {:.6}", got.value, oracle));
    }
    Ok(notes.join("; "))
}

fn falsification() -> Check {
    let d = 32;
    let c_max = 1e4;
    let fam = DualFamily::coordinate_l2(d).unwrap();
    let settings = FalsifySettings::default();
    let shift = LinearOperator::shift(d, l2(), l2()).unwrap();
    let w = match ehrling::falsify(&shift, &l2(), &fam, 0.5, c_max, &settings).unwrap() {
        FalsifyOutcome::Witness(w) => w,
        other => return Err(format!("shift: {other:?}")),
    };
    let n = w.basis_index.ok_or("witness is not a basis vector")?;
    let exact = 1.0 - 0.5 - c_max * 2f64.powi(-(n as i32));
    ensure!(
        exact > 0.0 && w.residual > 0.0,
        "n = {n}: exact {exact}, residual {}",
        w.residual
    );
    // The reported residual uses the upper enclosure of the very weak norm,
    // whose width is at most the family tolerance.
    let slack = c_max * settings.tolerance;
    ensure!(
        w.residual <= exact && exact - w.residual <= slack,
        "residual {} vs exact {exact}",
        w.residual
    );
    match ehrling::falsify(&halving(d), &l2(), &fam, 0.5, c_max, &settings).unwrap() {
        FalsifyOutcome::NotFound { best_ratio, .. } => Ok(format!(
            "shift witness e_{n}, residual {:.12} (exact {exact:.12}); diagonal best ratio {best_ratio:.4}",
            w.residual
        )),
        other => Err(format!("diagonal: {other:?}")),
    }
}

fn reverse_inequality() -> Check {
    let t = diagonal(vec![1.0, 0.5, 0.25]);
    let fam = DualFamily::coordinate_l2(3).unwrap();
    let opt = OptimizerSettings::default();
    let mut notes = Vec::new();
    for eps in [0.25, 0.1] {
        let rc = ehrling::reverse_certificate(&t, &fam, eps, 1e-15, &opt).unwrap();
        let check = EhrlingProblem::reverse(&t, &fam, 1e-15)
            .unwrap()
            .verify(eps, rc.c, &sampler(10_000), &opt)
            .unwrap();
        ensure!(
            check.verdict == Verdict::Pass && check.residual <= 1e-8,
            "eps {eps}: {:?} residual {}",
            check.verdict,
            check.residual
        );
        notes.push(format!("eps {eps}: delta {:.4}, C {:.4}", rc.delta, rc.c));
    }
    Ok(notes.join("; "))
}

fn sobolev_chain() -> Check {
    let d = 8;
    let h = 0.25;
    let theta = LinearOperator::sobolev_embedding(d, h).unwrap();
    let weights = (0..d).map(|i| h * 0.5f64.powi(i as i32)).collect();
    let z = NormSpec::weighted_lp(2.0, weights).unwrap();
    let tau = LinearOperator::identity(d, theta.codomain().clone(), z).unwrap();
    let cert = ehrling::three_space_certificate(
        &theta,
        &tau,
        &[1.0, 0.5, 0.25],
        &sampler(10_000),
        &OptimizerSettings::default(),
    )
    .unwrap();
    for row in &cert.rows {
        ensure!(
            row.verdict == Verdict::Pass && row.residual <= 1e-8,
            "eps {}: {:?}",
            row.eps,
            row
        );
    }
    for w in cert.rows.windows(2) {
        ensure!(w[1].c > w[0].c, "C not increasing: {} then {}", w[0].c, w[1].c);
    }
    let cs: Vec<String> = cert.rows.iter().map(|r| format!("{:.4}", r.c)).collect();
    Ok(format!("C = [{}]", cs.join(", ")))
}

fn counterexample() -> Check {
    let mut notes = Vec::new();
    for fam in [DualFamily::coordinate_l2(8).unwrap(), DualFamily::dense_l2(8).unwrap()] {
        for n in [1usize, 2, 4, 8, 16] {
            let t = counterexample_term(&fam, n, DimSchedule::default()).unwrap();
            let norm = linalg::norm2(t.u.coeffs());
            ensure!((norm - n as f64).abs() <= 1e-9, "n {n}: norm {norm}");
            let wide = fam.with_dim(t.dim).unwrap();
            let terms = annihilated_terms(n);
            let pairing = (1..=terms)
                .map(|j| wide.enumerate(j).unwrap().pair(&t.u).abs())
                .fold(0.0, f64::max);
            ensure!(pairing <= 1e-9, "n {n}: pairing {pairing}");
            ensure!(t.very_weak.hi < 1.0 / n as f64, "n {n}: hi {}", t.very_weak.hi);
        }
        notes.push(fam.mode().label());
    }
    Ok(format!("{} families", notes.join(" and ")))
}

fn cli_determinism() -> Check {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let golden = root.join("tests/golden");
    let spawn = |scenario: &str| -> Result<(tempfile::TempDir, std::process::Child), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let child = Command::new(env!("CARGO_BIN_EXE_ehrling"))
            .arg("run")
            .arg(root.join("scenarios").join(scenario))
            .arg("--output-dir")
            .arg(dir.path())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?;
        Ok((dir, child))
    };
    let finish =
        |(dir, mut child): (tempfile::TempDir, std::process::Child)| -> Result<(tempfile::TempDir, i32), String> {
            let status = child.wait().map_err(|e| e.to_string())?;
            Ok((dir, status.code().unwrap_or(-1)))
        };
    let mut compared = 0;
    for (scenario, code) in [("norm.json", 0), ("certify.json", 0), ("falsify.json", 2)] {
        // Two independent processes, run side by side.
        let first = spawn(scenario)?;
        let second = spawn(scenario)?;
        let (a, ca) = finish(first)?;
        let (b, cb) = finish(second)?;
        ensure!(ca == code && cb == code, "{scenario}: exit {ca}/{cb}, expected {code}");
        for entry in std::fs::read_dir(a.path()).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            let first = std::fs::read(a.path().join(&name)).map_err(|e| e.to_string())?;
            let second = std::fs::read(b.path().join(&name)).map_err(|e| e.to_string())?;
            let want = std::fs::read(golden.join(&name)).map_err(|e| format!("{name:?}: {e}"))?;
            ensure!(first == second, "{name:?} differs between runs");
            ensure!(first == want, "{name:?} differs from its golden copy");
            compared += 1;
        }
    }
    Ok(format!("{compared} files identical across runs and to golden copies"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("very weak norm is dominated by the norm", 10, domination),
        ("tail bound is sound", 5, tail_soundness),
        (
            "weak and very weak convergence agree on bounded sequences",
            10,
            mode_equivalence,
        ),
        ("constructive certificate verifies", 60, constructive_certificate),
        ("sharp constant matches the grid oracle", 120, oracle_agreement),
        ("falsification of the shift", 30, falsification),
        ("reverse inequality verifies", 60, reverse_inequality),
        ("three-space inequality on the Sobolev chain", 60, sobolev_chain),
        ("counterexample sequence", 30, counterexample),
        ("command line determinism and golden files", 10, cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(*limit) => {
                Err(format!("took {:.2}s, limit {limit}s", elapsed.as_secs_f64()))
            }
            r => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if result.is_err() {
            failed += 1;
        }
        println!(
            "criterion {:>2} {tag} [{:6.2}s / {limit}s] {name}: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
