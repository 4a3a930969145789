//! Randomized invariants of norms, the very weak norm, operators and the
//! inequality objectives.

use ehrling_core::ehrling::{EhrlingProblem, Gauge};
use ehrling_core::linalg::{self, Matrix};
use ehrling_core::operators::LinearOperator;
use ehrling_core::veryweak::{tail_bound, very_weak_distance, very_weak_norm};
use ehrling_core::{DualFamily, Element, FamilyMode, Functional, NormSpec};
use proptest::prelude::*;

const D: usize = 6;

fn norms() -> Vec<NormSpec> {
    vec![
        NormSpec::lp(1.0).unwrap(),
        NormSpec::l2(),
        NormSpec::lp(3.0).unwrap(),
        NormSpec::lp(f64::INFINITY).unwrap(),
        NormSpec::weighted_lp(2.0, vec![1.0, 0.5, 0.25, 2.0, 3.0, 0.1]).unwrap(),
        NormSpec::weighted_lp(1.5, vec![0.3; D]).unwrap(),
        NormSpec::sobolev_h1(0.3).unwrap(),
        NormSpec::very_weak(DualFamily::coordinate_l2(D).unwrap(), 1e-6).unwrap(),
        NormSpec::very_weak(DualFamily::dense_l2(D).unwrap(), 1e-3).unwrap(),
    ]
}

fn base_norms() -> Vec<NormSpec> {
    norms().into_iter().filter(|n| n.kind_name() != "very-weak").collect()
}

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d)
}

fn el(v: Vec<f64>) -> Element {
    Element::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_axioms(u in vector(D), v in vector(D), c in -5.0..5.0f64) {
        for n in norms() {
            let nu = n.eval(&u);
            let nv = n.eval(&v);
            prop_assert!(nu >= 0.0);
            prop_assert_eq!(n.eval(&[0.0; D]), 0.0);
            if u.iter().any(|x| *x != 0.0) {
                prop_assert!(nu > 0.0, "{} vanished", n.label());
            }
            let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
            prop_assert!((n.eval(&cu) - c.abs() * nu).abs() <= 1e-12 * (1.0 + c.abs() * nu));
            let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert!(n.eval(&s) <= (nu + nv) * (1.0 + 1e-12) + 1e-300, "{}", n.label());
        }
    }

    #[test]
    fn holder_inequality(f in vector(D), u in vector(D)) {
        for n in base_norms() {
            let g = Functional::measured(f.clone(), &n).unwrap();
            let lhs = linalg::dot(&f, &u).abs();
            let rhs = n.dual_norm(&g).unwrap() * n.eval(&u);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{}: {lhs} > {rhs}", n.label());
        }
    }

    #[test]
    fn family_members_lie_in_the_dual_ball(k in 1usize..5000, dense in any::<bool>()) {
        let mode = if dense { FamilyMode::DenseRational } else { FamilyMode::Coordinate };
        for n in base_norms() {
            let fam = DualFamily::new(mode, n.clone(), D).unwrap();
            let phi = fam.enumerate(k).unwrap();
            prop_assert!(n.dual_norm(&phi).unwrap() <= 1.0 + 1e-9, "{} k={k}", n.label());
            prop_assert_eq!(&phi, &fam.enumerate(k).unwrap());
        }
    }

    #[test]
    fn very_weak_norm_is_dominated(u in vector(32), tol in 1e-12..1e-2f64) {
        for fam in [DualFamily::dense_l2(32).unwrap(), DualFamily::coordinate_l2(32).unwrap()] {
            let u = el(u.clone());
            let v = very_weak_norm(&fam, &u, tol).unwrap();
            prop_assert!(v.lo <= v.hi);
            prop_assert!(v.width() <= tol * (1.0 + 1e-12));
            prop_assert!(v.hi <= NormSpec::l2().norm(&u).unwrap() + tol);
        }
    }

    #[test]
    fn very_weak_norm_is_homogeneous(u in vector(D), c in -8.0..8.0f64) {
        let fam = DualFamily::dense_l2(D).unwrap();
        let tol = 1e-9;
        let a = very_weak_norm(&fam, &el(u.clone()), tol).unwrap();
        let b = very_weak_norm(&fam, &el(u.iter().map(|x| c * x).collect()), tol).unwrap();
        let slack = 1e-12 * (1.0 + a.hi * c.abs());
        prop_assert!(b.lo <= c.abs() * a.hi + slack);
        prop_assert!(c.abs() * a.lo <= b.hi + slack);
    }

    #[test]
    fn very_weak_distance_triangle(u in vector(D), v in vector(D), w in vector(D)) {
        let fam = DualFamily::dense_l2(D).unwrap();
        let tol = 1e-8;
        let (u, v, w) = (el(u), el(v), el(w));
        let uw = very_weak_distance(&fam, &u, &w, tol).unwrap();
        let uv = very_weak_distance(&fam, &u, &v, tol).unwrap();
        let vw = very_weak_distance(&fam, &v, &w, tol).unwrap();
        prop_assert!(uw.lo <= uv.hi + vw.hi + 2.0 * tol);
        let uu = very_weak_distance(&fam, &u, &u, tol).unwrap();
        prop_assert_eq!(uu.hi, 0.0);
    }

    #[test]
    fn partial_tails_respect_the_uniform_bound(u in vector(D), m in 1usize..24) {
        let fam = DualFamily::dense_l2(D).unwrap();
        let r = linalg::norm2(&u);
        let tail: f64 = (m + 1..=m + 40)
            .map(|k| (linalg::dot(fam.enumerate(k).unwrap().coeffs(), &u)).abs() * 2f64.powi(-(k as i32)))
            .sum();
        prop_assert!(tail <= tail_bound(m, r) * (1.0 + 1e-12));
    }

    #[test]
    fn coordinate_mode_closed_form(u in vector(12)) {
        let fam = DualFamily::coordinate_l2(12).unwrap();
        let exact: f64 = u.iter().enumerate().map(|(i, x)| x.abs() * 2f64.powi(-(i as i32 + 1))).sum();
        let v = very_weak_norm(&fam, &el(u), 1e-10).unwrap();
        prop_assert!(v.lo <= exact * (1.0 + 1e-14) && exact <= v.hi * (1.0 + 1e-14));
    }

    #[test]
    fn operators_are_linear(u in vector(D), v in vector(D), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        for t in gallery() {
            let lhs = t.apply(&el(u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect())).unwrap();
            let rhs = t.apply(&el(u.clone())).unwrap().scaled(a).axpy(b, &t.apply(&el(v.clone())).unwrap());
            let scale = 1.0 + linalg::norm2(rhs.coeffs());
            prop_assert!(linalg::norm2(lhs.sub(&rhs).coeffs()) <= 1e-10 * scale, "{}", t.label());
        }
    }

    #[test]
    fn residual_is_scale_invariant(u in vector(D), eps in 0.05..1.0f64, c in 0.1..10.0f64) {
        prop_assume!(linalg::norm2(&u) > 1e-3);
        let fam = DualFamily::coordinate_l2(D).unwrap();
        let problems = [
            EhrlingProblem::forward(&gallery()[0], &NormSpec::l2(), &Gauge::from(NormSpec::lp(1.0).unwrap())).unwrap(),
            EhrlingProblem::forward(&gallery()[0], &NormSpec::l2(), &Gauge::from(NormSpec::very_weak(fam.clone(), 1e-12).unwrap())).unwrap(),
            EhrlingProblem::reverse(&gallery()[0], &fam, 1e-12).unwrap(),
        ];
        let u3: Vec<f64> = u.iter().map(|x| 3.0 * x).collect();
        for p in &problems {
            let (a, b) = p.residual_bracket(&u, eps, c);
            let (a3, b3) = p.residual_bracket(&u3, eps, c);
            prop_assert!((a - a3).abs() <= 1e-9 * (1.0 + a.abs()));
            prop_assert!((b - b3).abs() <= 1e-9 * (1.0 + b.abs()));
            prop_assert!(b <= a + 1e-12);
        }
    }
}

fn gallery() -> Vec<LinearOperator> {
    let l2 = NormSpec::l2;
    let lambda: Vec<f64> = (0..D).map(|k| 2f64.powi(-(k as i32))).collect();
    let diag = LinearOperator::diagonal(lambda, l2(), l2()).unwrap();
    let dense = LinearOperator::dense(
        Matrix::from_row_major(D, D, (0..D * D).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect()),
        l2(),
        l2(),
    )
    .unwrap();
    let h = 1.0 / (D as f64 + 1.0);
    let kernel = LinearOperator::kernel(
        Matrix::from_row_major(
            D,
            D,
            (0..D * D)
                .map(|i| {
                    let (x, y) = ((i / D) as f64 * h, (i % D) as f64 * h);
                    x.min(y) * (1.0 - x.max(y))
                })
                .collect(),
        ),
        h,
        l2(),
        l2(),
    )
    .unwrap();
    let shift = LinearOperator::shift(D, l2(), l2()).unwrap();
    let emb = LinearOperator::sobolev_embedding(D, h).unwrap();
    let composed = LinearOperator::compose(&shift, &diag).unwrap();
    vec![diag, dense, kernel, shift, emb, composed]
}
