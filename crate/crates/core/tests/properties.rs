use std::f64::consts::PI;

use proptest::prelude::*;
use spinc_core::clifford::{e2, e3, norm_sq, CliffMat, Spinor};
use spinc_core::dirac::assemble_dsq;
use spinc_core::domains::build_torus2;
use spinc_core::immersion::{constraint_vector, project_constraint, recover_tf, spin_lift, theta, tilted_graph};
use spinc_core::report::CheckKind;
use spinc_core::spinc::make_spinc;
use spinc_core::{Complex64, Report};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rotation(a: f64, b: f64, g: f64) -> [[f64; 3]; 3] {
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
        let mut o = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
            }
        }
        o
    };
    mul(mul(rz(a), ry(b)), rz(g))
}

#[test]
fn clifford_relations() {
    let id = CliffMat::identity();
    for i in 0..2 {
        for j in 0..2 {
            let anti = e2(i) * e2(j) + e2(j) * e2(i);
            let expect = if i == j { -id * c(2.0, 0.0) } else { CliffMat::zeros() };
            assert!((anti - expect).norm() < 1e-15);
        }
    }
    // ω = i e₁e₂ is the chirality grading diag(1, −1)
    let omega = e2(0) * e2(1) * c(0.0, 1.0);
    assert!((omega - CliffMat::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))).norm() < 1e-15);
    // e₁e₂e₃ = 1 in the chosen three-dimensional representation
    assert!((e3(0) * e3(1) * e3(2) - id).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn squared_dirac_is_self_adjoint_and_nonnegative(n in 6usize..11, degree in -3i32..=3, seed in 0u64..1000) {
        let d = build_torus2(2.0 * PI, 2.0 * PI, n).unwrap();
        let s = make_spinc(&d, degree).unwrap();
        let op = assemble_dsq(&d, &s).unwrap();
        prop_assert!(op.self_adjoint_defect(3, seed) < 1e-10);
        let x: Vec<Complex64> = (0..op.dim())
            .map(|i| c(((i as u64 * 7919 + seed) % 97) as f64 / 97.0 - 0.5, ((i as u64 * 104729 + seed) % 89) as f64 / 89.0 - 0.5))
            .collect();
        let ax = op.apply_vec(&x);
        let q: f64 = x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum();
        prop_assert!(q >= -1e-10 * x.iter().map(|v| v.norm_sqr()).sum::<f64>());
    }

    #[test]
    fn spin_lift_double_covers(a in -PI..PI, b in 0.0..PI, g in -PI..PI) {
        let rot = rotation(a, b, g);
        let u = spin_lift(&rot);
        prop_assert!((u * u.adjoint() - CliffMat::identity()).norm() < 1e-12);
        prop_assert!((u.determinant() - c(1.0, 0.0)).norm() < 1e-12);
        for (j, row) in rot.iter().enumerate() {
            let lhs = u * e3(j) * u.adjoint();
            let rhs = (0..3).fold(CliffMat::zeros(), |acc, k| acc + e3(k) * c(row[k], 0.0));
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn constraint_solutions_determine_the_data(k in 0usize..81, re0 in -1.0..1.0f64, im0 in -1.0..1.0f64, re1 in -1.0..1.0f64, im1 in -1.0..1.0f64) {
        let phi0 = Spinor::new(c(re0, im0), c(re1, im1));
        prop_assume!(norm_sq(&phi0) > 1e-2);
        let d = tilted_graph(0.3, 9).unwrap();
        let phi = project_constraint(&d, k, phi0);
        prop_assume!(norm_sq(&phi) > 1e-6);
        prop_assert!(constraint_vector(d.t[k], d.f[k], &phi).norm() < 1e-13 * norm_sq(&phi).sqrt().max(1.0));
        prop_assert!(theta(d.t[k], d.f[k], &phi).norm() < 1e-12 * norm_sq(&phi).sqrt().max(1.0));
        let (t, f) = recover_tf(&phi);
        prop_assert!((t[0] - d.t[k][0]).abs() < 1e-11 && (t[1] - d.t[k][1]).abs() < 1e-11 && (f - d.f[k]).abs() < 1e-11);
    }

    #[test]
    fn report_verdict_and_round_trip(values in prop::collection::vec((-1.0e3..1.0e3f64, 1e-12..1.0f64, 0u8..4), 0..12)) {
        let mut r = Report::new("prop");
        r.meta("backend", "torus2").scalar("x", 1.5);
        for (i, &(v, tol, kind)) in values.iter().enumerate() {
            let kind = [CheckKind::Residual, CheckKind::Slack, CheckKind::Positive, CheckKind::Info][kind as usize];
            r.check(&format!("c{i}"), kind, v, tol);
        }
        prop_assert_eq!(r.pass, r.checks.iter().all(|ch| ch.pass));
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }
}
