//! Deterministic maximization of 0-homogeneous objectives over the Euclidean
//! unit sphere, and seeded samplers for verification.
//!
//! All ratio objectives used by the certifiers are invariant under `v -> cv`,
//! `c > 0`, so maximizing over the sphere loses nothing. The search is an
//! axis scan, seeded multi-start projected ascent with a normalized
//! backtracking step, and a compass-search polish of the best starts.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm2};

/// Budget and reproducibility knobs shared by every optimizer-backed
/// operation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OptimizerSettings {
    /// Random ascent starts (in addition to the axis scan).
    pub starts: usize,
    /// Ascent iterations per start.
    pub iterations: usize,
    /// Number of best starts refined by compass search.
    pub polish: usize,
    /// Seed of the start generator.
    pub seed: u64,
    /// Relative width at which the modulus bisection stops.
    pub bisection_rel_width: f64,
    /// Smallest modulus tried, relative to the search upper bound.
    pub delta_floor_rel: f64,
    /// Shrink rounds allowed when the adversarial check finds a violation.
    pub safety_rounds: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            starts: 64,
            iterations: 200,
            polish: 4,
            seed: 0,
            bisection_rel_width: 1e-3,
            delta_floor_rel: 1e-9,
            safety_rounds: 20,
        }
    }
}

/// Best point found by [`maximize_on_sphere`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    /// Objective value at `argmax`.
    pub value: f64,
    /// Unit vector achieving `value`.
    pub argmax: Vec<f64>,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// False when the ascent budget ran out before the step collapsed.
    pub converged: bool,
}

/// Objective callback: returns `f(v)` and, when a buffer is passed, writes a
/// (sub)gradient of `f` at `v` into it.
pub trait Objective {
    /// Evaluates the objective.
    fn eval(&self, v: &[f64], grad: Option<&mut [f64]>) -> f64;
}

impl<F: Fn(&[f64], Option<&mut [f64]>) -> f64> Objective for F {
    fn eval(&self, v: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self(v, grad)
    }
}

struct Counted<'a, O: ?Sized> {
    f: &'a O,
    calls: core::cell::Cell<usize>,
    stop_above: f64,
    hit: core::cell::RefCell<Option<(f64, Vec<f64>)>>,
}

impl<O: Objective + ?Sized> Counted<'_, O> {
    fn value(&self, v: &[f64]) -> f64 {
        self.calls.set(self.calls.get() + 1);
        self.watch(finite_or_neg(self.f.eval(v, None)), v)
    }

    fn value_grad(&self, v: &[f64], g: &mut [f64]) -> f64 {
        self.calls.set(self.calls.get() + 1);
        g.iter_mut().for_each(|x| *x = 0.0);
        self.watch(finite_or_neg(self.f.eval(v, Some(g))), v)
    }

    fn watch(&self, value: f64, v: &[f64]) -> f64 {
        if value > self.stop_above && !self.stopped() {
            *self.hit.borrow_mut() = Some((value, v.to_vec()));
        }
        value
    }

    fn stopped(&self) -> bool {
        self.hit.borrow().is_some()
    }
}

fn finite_or_neg(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = norm2(v);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Maximizes a 0-homogeneous objective over the unit sphere of `R^dim`.
///
/// Candidates are the `2 dim` signed axes, the `extra` points (normalized,
/// zero vectors skipped) and `settings.starts` Gaussian starts. Ascent runs
/// from the random starts and the best deterministic candidates; the overall
/// best few are polished by compass search. The result is deterministic for
/// fixed settings.
pub fn maximize_on_sphere<O: Objective + ?Sized>(
    dim: usize,
    f: &O,
    extra: &[Vec<f64>],
    settings: &OptimizerSettings,
) -> Maximum {
    search(dim, f, extra, settings, f64::INFINITY)
}

/// Same search as [`maximize_on_sphere`], but returns at the first point
/// whose value exceeds `threshold`. The result exceeds `threshold` exactly
/// when the full search would.
pub fn exceeds_on_sphere<O: Objective + ?Sized>(
    dim: usize,
    f: &O,
    extra: &[Vec<f64>],
    settings: &OptimizerSettings,
    threshold: f64,
) -> Maximum {
    search(dim, f, extra, settings, threshold)
}

fn search<O: Objective + ?Sized>(
    dim: usize,
    f: &O,
    extra: &[Vec<f64>],
    settings: &OptimizerSettings,
    stop_above: f64,
) -> Maximum {
    assert!(dim > 0, "dimension must be positive");
    let f = Counted {
        f,
        calls: core::cell::Cell::new(0),
        stop_above,
        hit: core::cell::RefCell::new(None),
    };
    let early = |f: &Counted<'_, O>| {
        f.hit.borrow().clone().map(|(value, argmax)| Maximum {
            value,
            argmax,
            evaluations: f.calls.get(),
            converged: false,
        })
    };

    // Deterministic candidates.
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::with_capacity(2 * dim + extra.len());
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            seeds.push((f.value(&e), e));
        }
    }
    for x in extra {
        let mut v = vec![0.0; dim];
        for (vi, xi) in v.iter_mut().zip(x) {
            *vi = *xi;
        }
        if normalize(&mut v) {
            seeds.push((f.value(&v), v));
        }
    }
    if let Some(m) = early(&f) {
        return m;
    }
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
    seeds.truncate(settings.polish.max(1) * 2);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for s in 0..settings.starts {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if s % 2 == 1 {
            // Every other start is biased towards the leading coordinates.
            for (i, x) in v.iter_mut().enumerate() {
                *x *= libm::ldexp(1.0, -((i as i32).min(60)));
            }
        }
        if normalize(&mut v) {
            seeds.push((f.value(&v), v));
        }
        if let Some(m) = early(&f) {
            return m;
        }
    }

    let mut converged = true;
    let mut results: Vec<(f64, Vec<f64>)> = Vec::with_capacity(seeds.len());
    let mut grad = vec![0.0; dim];
    for (_, v) in seeds {
        let (val, arg, conv) = ascend(&f, v, settings.iterations, &mut grad);
        if let Some(m) = early(&f) {
            return m;
        }
        converged &= conv;
        results.push((val, arg));
    }
    results.sort_by(|a, b| b.0.total_cmp(&a.0));
    results.truncate(settings.polish.max(1));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (fv, v) in results {
        let (val, arg) = compass(&f, v, fv);
        if let Some(m) = early(&f) {
            return m;
        }
        if best.as_ref().is_none_or(|b| val > b.0) {
            best = Some((val, arg));
        }
    }
    let (value, argmax) = best.expect("at least one candidate");
    Maximum {
        value,
        argmax,
        evaluations: f.calls.get(),
        converged,
    }
}

fn ascend<O: Objective + ?Sized>(
    f: &Counted<'_, O>,
    mut v: Vec<f64>,
    iterations: usize,
    grad: &mut [f64],
) -> (f64, Vec<f64>, bool) {
    let mut fv = f.value_grad(&v, grad);
    let mut step = 0.25;
    let mut w = vec![0.0; v.len()];
    for _ in 0..iterations {
        let radial = dot(grad, &v);
        grad.iter_mut().zip(&v).for_each(|(g, x)| *g -= radial * x);
        let gn = norm2(grad);
        if !(gn > 0.0 && gn.is_finite()) {
            return (fv, v, true);
        }
        loop {
            for ((wi, vi), gi) in w.iter_mut().zip(&v).zip(grad.iter()) {
                *wi = vi + step * gi / gn;
            }
            let fw = if normalize(&mut w) {
                f.value(&w)
            } else {
                f64::NEG_INFINITY
            };
            if f.stopped() {
                return (fw, w, false);
            }
            if fw > fv {
                core::mem::swap(&mut v, &mut w);
                fv = f.value_grad(&v, grad);
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return (fv, v, true);
            }
        }
    }
    (fv, v, false)
}

fn compass<O: Objective + ?Sized>(f: &Counted<'_, O>, mut v: Vec<f64>, mut fv: f64) -> (f64, Vec<f64>) {
    let d = v.len();
    let mut step = 0.1;
    let mut w = vec![0.0; d];
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..d {
            for s in [step, -step] {
                w.copy_from_slice(&v);
                w[i] += s;
                if !normalize(&mut w) {
                    continue;
                }
                let fw = f.value(&w);
                if f.stopped() {
                    return (fw, w);
                }
                if fw > fv {
                    core::mem::swap(&mut v, &mut w);
                    fv = fw;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fv, v)
}

/// `count` deterministic sample points of the Euclidean unit ball in
/// `R^dim`: a mix of uniform ball points, sparse points and points with
/// geometrically decaying coordinates.
pub fn ball_samples(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|s| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            match s % 4 {
                1 => {
                    // at most three nonzero coordinates
                    let keep: [usize; 3] = core::array::from_fn(|_| rng.random_range(0..dim));
                    for (i, x) in v.iter_mut().enumerate() {
                        if !keep.contains(&i) {
                            *x = 0.0;
                        }
                    }
                }
                2 => {
                    let rate: f64 = rng.random_range(0.3..0.9);
                    for (i, x) in v.iter_mut().enumerate() {
                        *x *= libm::pow(rate, i as f64);
                    }
                }
                3 => {
                    let rate: f64 = rng.random_range(0.3..0.9);
                    for (i, x) in v.iter_mut().rev().enumerate() {
                        *x *= libm::pow(rate, i as f64);
                    }
                }
                _ => {}
            }
            if !normalize(&mut v) {
                v = vec![0.0; dim];
                v[0] = 1.0;
            }
            let r = libm::pow(rng.random::<f64>(), 1.0 / dim as f64);
            v.iter_mut().for_each(|x| *x *= r);
            v
        })
        .collect()
}

/// `count` deterministic Gaussian vectors whose `i`-th coordinate is scaled
/// by `2^-i`.
pub fn decaying_gaussians(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|i| rng.sample::<f64, _>(StandardNormal) * libm::ldexp(1.0, -((i as i32).min(1000))))
                .collect()
        })
        .collect()
}
