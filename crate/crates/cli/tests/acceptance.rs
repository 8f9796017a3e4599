//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
//! criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spinc_core::clifford::{norm_sq, Spinor};
use spinc_core::dirac::{assemble_d_sphere, assemble_dsq, eigenpairs, Eigenpair};
use spinc_core::domains::{build_sphere_ladder, build_torus2, build_torus3};
use spinc_core::immersion::{
    self, constraint_vector, daniel_check, defect_data, integrate_gks, project_constraint, theta, Channel,
};
use spinc_core::linalg::EigenConfig;
use spinc_core::spinc::make_spinc;
use spinc_core::verify::{
    convergence_order, thm41_equality_checks, verify_bar_bound, verify_det_bound, verify_examples,
    verify_fk_spin, verify_thm31, verify_thm41,
};
use spinc_core::{Complex64, Domain, SpincStructure};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Accumulates sub-check results of one criterion.
#[derive(Default)]
struct Checks {
    notes: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn finish(self) -> Outcome {
        if self.failed.is_empty() {
            Ok(self.notes.join("; "))
        } else {
            Err(format!("{} | ok: {}", self.failed.join("; "), self.notes.join("; ")))
        }
    }
}

fn solve(d: &Domain, s: &SpincStructure, first_order: bool, k: usize, shift: f64) -> Vec<Eigenpair> {
    let op = if first_order { assemble_d_sphere(d, s) } else { assemble_dsq(d, s) }.expect("operator");
    eigenpairs(&op, d, k, shift, &EigenConfig::default()).expect("eigenpairs")
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let d = build_sphere_ladder(16).map_err(|e| e.to_string())?;
    let s = make_spinc(&d, 2).map_err(|e| e.to_string())?;
    let p = solve(&d, &s, false, 1, 0.0).remove(0);
    let r = verify_bar_bound(&d, &s, p.value, &p.spinor, 0.0, 1e-10, 10.0).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed().as_secs_f64();
    // 2π·χ/Area − ∫|Ω|/Area with χ = 2, Area = 4π and |Ω| ≡ 1
    let (chi, area) = (2.0, 4.0 * PI);
    let int_omega = area;
    let rhs_oracle = 2.0 * PI * chi / area - int_omega / area;
    let mut c = Checks::default();
    c.expect(p.value.abs() < 1e-10, format!("λ₁² = {:.2e}", p.value));
    let rhs = r.value("rhs").unwrap_or(f64::NAN);
    c.expect((rhs - rhs_oracle).abs() < 1e-10, format!("rhs = {rhs:.2e}"));
    let kr = r.value("killing_residual").unwrap_or(f64::NAN);
    c.expect(r.pass && kr < 1e-10, format!("equality diagnostics pass, parallel residual {kr:.2e}"));
    c.expect(elapsed < 5.0, format!("{elapsed:.2} s at l_max = 16"));
    c.finish()
}

fn criterion_2() -> Outcome {
    let d = build_sphere_ladder(16).map_err(|e| e.to_string())?;
    let s = make_spinc(&d, 0).map_err(|e| e.to_string())?;
    let pairs = solve(&d, &s, true, 2, 1.0);
    let mut c = Checks::default();
    let lam1_sq = pairs.iter().map(|p| p.value * p.value).fold(f64::INFINITY, f64::min);
    c.expect((lam1_sq - 1.0).abs() < 1e-10, format!("λ₁² − 1 = {:.2e}", lam1_sq - 1.0));
    let (mut kill, mut fk, mut mean_t) = (0.0f64, 0.0f64, 0.0f64);
    let mut all_pass = true;
    for p in &pairs {
        let r = verify_bar_bound(&d, &s, p.value * p.value, &p.spinor, p.value, 1e-9, 10.0).map_err(|e| e.to_string())?;
        all_pass &= r.pass;
        kill = kill.max(r.value("killing_residual").unwrap_or(f64::INFINITY));
        let r = verify_fk_spin(&d, &s, &p.spinor, p.value, 1e-9).map_err(|e| e.to_string())?;
        fk = fk.max(r.value("residual").unwrap_or(f64::INFINITY).abs());
        mean_t = mean_t.max((r.value("mean_t_sq").unwrap_or(f64::INFINITY) - 0.5).abs());
    }
    c.expect(all_pass && kill < 1e-9, format!("Bär equality, Killing residual {kill:.2e}"));
    c.expect(fk < 1e-9, format!("fk_spin residual {fk:.2e}"));
    c.expect(mean_t < 1e-9, format!("|∫|T|²/Area − ½| = {mean_t:.2e}"));
    c.finish()
}

fn criterion_3() -> Outcome {
    let mut c = Checks::default();
    for deg in 1..=3i32 {
        let d = build_torus2(2.0 * PI, 2.0 * PI, 32).map_err(|e| e.to_string())?;
        let s = make_spinc(&d, deg).map_err(|e| e.to_string())?;
        let gap = 2.0 * PI * deg as f64 / d.area();
        let pairs = solve(&d, &s, false, deg as usize + 3, 0.0);
        let kernel = pairs.iter().filter(|p| p.value < 1e-3 * gap).count();
        c.expect(kernel == deg as usize, format!("d={deg}: kernel dim {kernel}"));
        let r = verify_bar_bound(&d, &s, pairs[0].value, &pairs[0].spinor, 0.0, 1e-6, 10.0).map_err(|e| e.to_string())?;
        let slack = r.value("slack").unwrap_or(f64::NAN);
        let rel = (slack - gap) / gap;
        c.expect(rel.abs() < 0.02, format!("d={deg}: slack {slack:.5} vs 2π|d|/Area {gap:.5} (rel {rel:+.3})"));
    }
    c.finish()
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let mut worst = Vec::new();
    for n in [16, 32, 64] {
        let d = build_torus2(2.0 * PI, 2.0 * PI, n).map_err(|e| e.to_string())?;
        let s = make_spinc(&d, 1).map_err(|e| e.to_string())?;
        let pairs = solve(&d, &s, false, 6, 0.0);
        let mut w: f64 = 0.0;
        for p in &pairs {
            let r = verify_thm31(&d, &s, &p.spinor, p.value, 1.0).map_err(|e| e.to_string())?;
            w = w.max(r.value("residual_l2").unwrap_or(f64::INFINITY));
        }
        worst.push(w);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let o1 = convergence_order(worst[0], worst[1], 2.0);
    let o2 = convergence_order(worst[1], worst[2], 2.0);
    let mut c = Checks::default();
    c.expect(worst[2] < 1e-3, format!("max L² residual at N=64: {:.2e}", worst[2]));
    c.expect(o1 >= 1.8 && o2 >= 1.8, format!("orders {o1:.2} (16→32), {o2:.2} (32→64)"));
    c.expect(elapsed < 60.0, format!("{elapsed:.1} s"));
    c.finish()
}

fn criterion_5() -> Outcome {
    let mut c = Checks::default();
    let d = build_sphere_ladder(16).map_err(|e| e.to_string())?;
    let s = make_spinc(&d, 2).map_err(|e| e.to_string())?;
    let p = solve(&d, &s, false, 1, 0.0).remove(0);
    let r = verify_det_bound(&d, &s, &p.spinor, 0.0, 1e-8).map_err(|e| e.to_string())?;
    let (lhs, rhs) = (r.value("lhs").unwrap_or(f64::NAN), r.value("rhs").unwrap_or(f64::NAN));
    c.expect(lhs.abs() < 1e-8 && rhs.abs() < 1e-8, format!("canonical sphere lhs {lhs:.1e}, rhs {rhs:.1e}"));
    c.expect(r.value("omega_sign_changes") == Some(0.0), "Ω of constant sign".into());

    let s = make_spinc(&d, 0).map_err(|e| e.to_string())?;
    let p = solve(&d, &s, true, 1, 1.0).remove(0);
    let r = verify_det_bound(&d, &s, &p.spinor, p.value, 1e-6).map_err(|e| e.to_string())?;
    let lhs = r.value("lhs").unwrap_or(f64::NAN);
    c.expect((lhs - PI).abs() < 1e-6, format!("spin sphere ∫det T − π = {:.1e} (πχ/2 = π, not πχ)", lhs - PI));

    let d = build_torus2(2.0 * PI, 2.0 * PI, 32).map_err(|e| e.to_string())?;
    let s = make_spinc(&d, 0).map_err(|e| e.to_string())?;
    let p = solve(&d, &s, false, 1, 0.0).remove(0);
    let r = verify_det_bound(&d, &s, &p.spinor, 0.0, 1e-8).map_err(|e| e.to_string())?;
    let (lhs, rhs) = (r.value("lhs").unwrap_or(f64::NAN), r.value("rhs").unwrap_or(f64::NAN));
    c.expect(lhs.abs() < 1e-8 && rhs.abs() < 1e-12, format!("torus d=0 lhs {lhs:.1e}, rhs {rhs:.1e}"));
    c.finish()
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let d = build_torus3([2.0 * PI; 3], 24).map_err(|e| e.to_string())?;
    let s = make_spinc(&d, 1).map_err(|e| e.to_string())?;
    let pairs = solve(&d, &s, false, 6, 0.0);
    let mut c = Checks::default();
    let mut r = verify_thm41(&d, &s, &pairs[0].spinor, pairs[0].value, 1e-5).map_err(|e| e.to_string())?;
    thm41_equality_checks(&mut r, 1e-5);
    for name in ["equality_relative_slack", "equality_constant_density", "equality_clifford"] {
        let ch = r.get(name).expect("equality check");
        c.expect(ch.pass, format!("ground {name} = {:.2e}", ch.value));
    }
    for (i, p) in pairs.iter().enumerate().skip(1) {
        let r = verify_thm41(&d, &s, &p.spinor, p.value, 1e-5).map_err(|e| e.to_string())?;
        let slack = r.value("slack").unwrap_or(f64::NAN);
        c.expect(slack > 0.0, format!("state {i} slack {slack:.3e}"));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    c.expect(elapsed < 120.0, format!("{elapsed:.1} s"));
    c.finish()
}

fn criterion_7() -> Outcome {
    let mut c = Checks::default();
    let surfaces = [
        immersion::slice(17).map_err(|e| e.to_string())?,
        immersion::great_circle_cylinder(17).map_err(|e| e.to_string())?,
        immersion::latitude_cylinder(0.8, 17).map_err(|e| e.to_string())?,
    ];
    for d in &surfaces {
        let r = daniel_check(d, 1e-9);
        let worst = Channel::ALL.iter().map(|ch| r.value(ch.name()).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        c.expect(r.pass && worst < 1e-9, format!("{}: Daniel max {worst:.1e}", d.label));
    }
    for ch in Channel::ALL {
        let r = daniel_check(&defect_data(ch, 1e-3, 17).map_err(|e| e.to_string())?, 1e-6);
        let hit = r.value(ch.name()).unwrap_or(0.0);
        let leak = Channel::ALL
            .iter()
            .filter(|o| **o != ch)
            .map(|o| r.value(o.name()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        c.expect(hit >= 0.5e-3 && leak <= 1e-6, format!("{} defect {hit:.1e}, leak {leak:.1e}", ch.name()));
    }
    let phi0 = Spinor::new(Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.7));
    let g = integrate_gks(&surfaces[0], phi0).map_err(|e| e.to_string())?;
    c.expect(g.max_constraint() < 1e-8, format!("slice GKS constraint {:.1e}", g.max_constraint()));
    let mut theta_max: f64 = 0.0;
    let mut cons_max: f64 = 0.0;
    for d in &surfaces {
        for k in 0..d.n_points() {
            let phi = project_constraint(d, k, phi0);
            cons_max = cons_max.max(constraint_vector(d.t[k], d.f[k], &phi).norm());
            theta_max = theta_max.max(norm_sq(&theta(d.t[k], d.f[k], &phi)).sqrt());
        }
    }
    c.expect(theta_max < 1e-12, format!("|θ| ≤ {theta_max:.1e} where the constraint holds ({cons_max:.1e})"));
    c.finish()
}

fn criterion_8() -> Outcome {
    let mut c = Checks::default();
    let cot = 0.8f64.cos() / 0.8f64.sin();
    let cases = [
        (immersion::r3_unit_sphere(16), 1.0),
        (immersion::clifford_torus_patch([0.0, 0.0], 2.0 * PI, 33).map_err(|e| e.to_string())?.to_example_data(), 0.5),
        (immersion::slice(17).map_err(|e| e.to_string())?.to_example_data(), 0.0),
        (immersion::latitude_cylinder(0.8, 17).map_err(|e| e.to_string())?.to_example_data(), cot * cot / 4.0),
    ];
    for (e, lhs_oracle) in &cases {
        let r = verify_examples(e, 1e-9).map_err(|e| e.to_string())?;
        let (lhs, rhs) = (r.value("lhs").unwrap_or(f64::NAN), r.value("rhs").unwrap_or(f64::NAN));
        c.expect(
            r.pass && (lhs - lhs_oracle).abs() < 1e-9 && (rhs - lhs_oracle).abs() < 1e-9,
            format!("{}: {lhs:.6} = {rhs:.6}", e.label),
        );
    }
    c.finish()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("spinc-acceptance-{}", std::process::id()));
    let runs = [
        ("verify", "canonical-sphere"),
        ("verify", "spin-sphere"),
        ("spectrum", "torus-sweep"),
        ("verify", "torus-sweep"),
        ("verify", "torus-convergence"),
        ("verify", "torus3"),
        ("immerse", "immersion"),
    ];
    let mut trees = Vec::new();
    for rep in ["a", "b"] {
        let root = tmp.join(rep);
        for (cmd, preset) in runs {
            let out = root.join(format!("{cmd}-{preset}"));
            let status = Command::new(env!("CARGO_BIN_EXE_spinc"))
                .args([cmd, "--preset", preset, "--seed", "11", "--out", out.to_str().unwrap()])
                .env_remove("SPINC_CONFIG")
                .env_remove("SPINC_OUT")
                .env_remove("SPINC_SEED")
                .env_remove("SPINC_TOL")
                .env_remove("SPINC_PRESET")
                .output()
                .map_err(|e| e.to_string())?;
            if !matches!(status.status.code(), Some(0 | 1)) {
                return Err(format!("{cmd} {preset} exited {:?}", status.status.code()));
            }
        }
        trees.push(tree(&root));
    }
    let _ = fs::remove_dir_all(&tmp);
    let files = trees[0].len();
    let kinds = ["csv", "json", "svg"].map(|ext| trees[0].keys().filter(|k| k.ends_with(ext)).count());
    let differing: Vec<&String> =
        trees[0].keys().filter(|k| trees[1].get(*k) != trees[0].get(*k)).chain(trees[1].keys().filter(|k| !trees[0].contains_key(*k))).collect();
    let mut c = Checks::default();
    c.expect(kinds.iter().all(|&n| n > 0), format!("{files} files ({} csv, {} json, {} svg)", kinds[0], kinds[1], kinds[2]));
    c.expect(differing.is_empty(), format!("{} files differ between runs {differing:?}", differing.len()));
    c.finish()
}

fn main() {
    // libtest-style filter arguments are accepted and ignored
    let criteria: [Criterion; 9] = [
        ("canonical Spin^c sphere", criterion_1),
        ("spin sphere", criterion_2),
        ("flat torus index sweep", criterion_3),
        ("energy-momentum identity and convergence", criterion_4),
        ("determinant bound", criterion_5),
        ("3-D eigenvalue bound on flat T³", criterion_6),
        ("immersion suite", criterion_7),
        ("example identities", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {} PASS [{name}] ({secs:.1} s): {msg}", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {} FAIL [{name}] ({secs:.1} s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
