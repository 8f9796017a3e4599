//! One verifier per identity, inequality, and equality case.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford;
use crate::domains::{Domain, DomainKind};
use crate::emt::{compute_emt, det_tq, field_jet, masked_linf, masked_rms, EmtData, emt_from_jet};
use crate::error::{Error, Result};
use crate::report::{CheckKind, Report};
use crate::spinc::{omega_clifford, SpincStructure, SpinorField};

/// Largest masked fraction for which pointwise verdicts are issued.
pub const MAX_MASKED_FRACTION: f64 = 0.01;

/// Verification tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Absolute tolerance on the spectral backend.
    pub spectral: f64,
    /// `C` in the lattice tolerance `C·h²`.
    pub lattice_c: f64,
    /// Slack below `equality_factor · tol` triggers equality diagnostics.
    pub equality_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectral: 1e-8, lattice_c: 0.5, equality_factor: 10.0 }
    }
}

impl Tolerances {
    pub fn for_domain(&self, d: &Domain) -> f64 {
        match d.kind {
            DomainKind::SphereLadder => self.spectral,
            _ => self.lattice_c * d.h.iter().copied().fold(0.0, f64::max).powi(2),
        }
    }
}

fn describe(r: &mut Report, d: &Domain, s: &SpincStructure) {
    r.meta("backend", d.kind.name()).meta("degree", s.degree);
    match d.l_max {
        Some(l) => r.meta("N", format!("lmax{l}")),
        None => r.meta("N", d.n[0]),
    };
}

fn masked_integral(d: &Domain, e: &EmtData, f: impl Fn(usize) -> f64) -> f64 {
    (0..e.n_points()).filter(|&x| !e.mask[x]).map(|x| f(x) * d.weights[x]).sum()
}

fn mask_check(r: &mut Report, e: &EmtData) {
    r.check("masked_fraction", CheckKind::Residual, e.masked_fraction(), MAX_MASKED_FRACTION);
}

/// Density-weighted residual `r · u / max u`, which stays bounded at the
/// zeros of `ψ` where the pointwise quotients blow up.
fn density_weighted(e: &EmtData, r: &[f64]) -> Vec<f64> {
    let umax = e.density.iter().copied().fold(0.0, f64::max);
    r.iter().zip(&e.density).map(|(v, u)| v * u / umax).collect()
}

/// Pointwise right-hand side of the energy-momentum identity
/// `S/4 + |T|² + |Q|² + Δf + |Y|² − 2Y(f) + (i/2 Ω·ψ, ψ)/u`.
pub fn thm31_rhs(d: &Domain, e: &EmtData) -> Vec<f64> {
    (0..e.n_points())
        .map(|x| {
            0.25 * d.scalar_curvature(x) + e.t_sq(x) + e.q_sq(x) + e.lap_f[x] + e.y_sq(x) - 2.0 * e.y_f(x)
                + e.zeeman[x]
        })
        .collect()
}

/// `λ² = S/4 + |T|² + |Q|² + Δf + |Y|² − 2Y(f) + (i/2 Ω·ψ, ψ/|ψ|²)` for a
/// `D²`-eigenspinor.
pub fn verify_thm31(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda_sq: f64, tol: f64) -> Result<Report> {
    if d.dim() != 2 {
        return Err(Error::DomainKind("the energy-momentum identity is stated on surfaces".into()));
    }
    let e = compute_emt(d, s, psi, None)?;
    let rhs = thm31_rhs(d, &e);
    let raw: Vec<f64> = rhs.iter().map(|v| lambda_sq - v).collect();
    let weighted = density_weighted(&e, &raw);
    let mut r = Report::new("thm31");
    describe(&mut r, d, s);
    r.scalar("lambda_sq", lambda_sq)
        .norm("residual_density_weighted", masked_rms(d, &e, &weighted), masked_linf(&e, &weighted))
        .norm("residual_raw", masked_rms(d, &e, &raw), masked_linf(&e, &raw))
        .residual("residual_l2", masked_rms(d, &e, &weighted), tol)
        .info("residual_raw_l2", masked_rms(d, &e, &raw));
    mask_check(&mut r, &e);
    Ok(r)
}

/// Observed convergence order from residuals at spacings `h` and `h/ratio`.
pub fn convergence_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

fn d_eigen_emt(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda: f64) -> Result<EmtData> {
    let dpsi = psi.scaled(Complex64::from(lambda));
    compute_emt(d, s, psi, Some(&dpsi))
}

/// `λ² = S/4 + |T|² + Δf + (i/2 Ω·ψ, ψ/|ψ|²)` with `Y ≡ 0`, `Q ≡ 0` for a
/// `D`-eigenspinor.
pub fn verify_rem32(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda: f64, tol: f64) -> Result<Report> {
    let jet = field_jet(d, s, psi)?;
    let dpsi = psi.scaled(Complex64::from(lambda));
    let e = emt_from_jet(d, s, &jet, Some(&dpsi))?;
    let np = e.n_points();
    let raw: Vec<f64> = (0..np)
        .map(|x| lambda * lambda - (0.25 * d.scalar_curvature(x) + e.t_sq(x) + e.lap_f[x] + e.zeeman[x]))
        .collect();
    let weighted = density_weighted(&e, &raw);
    let q: Vec<f64> = (0..np).map(|x| e.q12(x)).collect();
    // Y from the jet's own Dψ, which need not equal λψ numerically
    let jy: Vec<f64> = (0..np)
        .map(|x| {
            let u = e.density[x];
            (0..2).map(|i| clifford::re_dot(&jet.dpsi[x], &(clifford::e2(i) * jet.value[x])) / u).map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let dirac_defect: Vec<f64> = (0..np)
        .map(|x| (jet.dpsi[x] - jet.value[x] * Complex64::from(lambda)).norm() / e.density[x].sqrt())
        .collect();
    let mut r = Report::new("rem32");
    describe(&mut r, d, s);
    r.scalar("lambda", lambda)
        .norm("residual", masked_rms(d, &e, &weighted), masked_linf(&e, &weighted))
        .residual("residual_l2", masked_rms(d, &e, &weighted), tol)
        .residual("q12_linf", masked_linf(&e, &q), tol)
        .residual("y_linf", masked_linf(&e, &jy), tol)
        .residual("dirac_eigen_defect", masked_rms(d, &e, &density_weighted(&e, &dirac_defect)), tol)
        .residual("integral_lap_f", masked_integral(d, &e, |x| e.lap_f[x]), tol)
        .info("lap_f_linf", masked_linf(&e, &e.lap_f));
    mask_check(&mut r, &e);
    Ok(r)
}

fn omega_integral(d: &Domain, s: &SpincStructure) -> f64 {
    d.integrate(&(0..d.n_points()).map(|x| s.omega_norm(x)).collect::<Vec<_>>())
}

/// `∫ det(T+Q) ≥ πχ/2 − ¼∫|Ω|` with equality diagnostics.
pub fn verify_det_bound(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda: f64, tol: f64) -> Result<Report> {
    let chi = d.euler.ok_or_else(|| Error::DomainKind("the determinant bound needs a closed surface".into()))?;
    let e = d_eigen_emt(d, s, psi, lambda)?;
    let (det, defect) = det_tq(&e)?;
    let lhs = masked_integral(d, &e, |x| det[x]);
    let int_omega = omega_integral(d, s);
    let rhs = PI * chi as f64 / 2.0 - 0.25 * int_omega;
    let plus = psi.plus_fraction(d);
    let om_max = s.omega.iter().map(|o| o[0]).fold(f64::NEG_INFINITY, f64::max);
    let om_min = s.omega.iter().map(|o| o[0]).fold(f64::INFINITY, f64::min);
    let mut r = Report::new("det_bound");
    describe(&mut r, d, s);
    r.scalar("lhs", lhs)
        .scalar("rhs", rhs)
        .scalar("slack", lhs - rhs)
        .slack("slack", lhs - rhs, tol)
        .residual("det_identity_defect", defect, 1e-10)
        .info("chirality_impurity", plus.min(1.0 - plus))
        .info("omega_sign_changes", if om_max > 0.0 && om_min < 0.0 { 1.0 } else { 0.0 })
        .info("integral_abs_omega", int_omega)
        .info("integral_abs_omega_minus_2pi_chi", int_omega - 2.0 * PI * chi as f64);
    mask_check(&mut r, &e);
    Ok(r)
}

/// `max_x max_i ‖∇_{e_i}ψ + (λ/2) e_i·ψ‖ / max|ψ|`.
pub fn killing_residual(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda: f64) -> Result<f64> {
    let jet = field_jet(d, s, psi)?;
    let scale = psi.density().iter().copied().fold(0.0, f64::max).sqrt();
    let mut worst: f64 = 0.0;
    for x in 0..psi.len() {
        for i in 0..d.dim() {
            let e = if d.dim() == 2 { clifford::e2(i) } else { clifford::e3(i) };
            let v = jet.grad[x][i] + e * jet.value[x] * Complex64::from(0.5 * lambda);
            worst = worst.max(v.norm());
        }
    }
    Ok(worst / scale)
}

/// `max ‖Ω·ψ − i|Ω|ψ‖ / max|ψ|`.
pub fn omega_equality_residual(s: &SpincStructure, psi: &SpinorField) -> f64 {
    let om = omega_clifford(s, psi);
    let scale = psi.density().iter().copied().fold(0.0, f64::max).sqrt();
    (0..psi.len())
        .map(|x| (om.values[x] - psi.values[x] * Complex64::new(0.0, s.omega_norm(x))).norm())
        .fold(0.0, f64::max)
        / scale
}

/// `λ₁² ≥ 2πχ/Area − ∫|Ω|/Area`, with the Killing diagnostics when the slack
/// is within the equality threshold. `lambda` carries the sign of the
/// `D`-eigenvalue when known.
pub fn verify_bar_bound(
    d: &Domain,
    s: &SpincStructure,
    lambda1_sq: f64,
    psi: &SpinorField,
    lambda: f64,
    tol: f64,
    equality_factor: f64,
) -> Result<Report> {
    let chi = d.euler.ok_or_else(|| Error::DomainKind("the Bär-type bound needs a closed surface".into()))?;
    let area = d.area();
    let int_omega = omega_integral(d, s);
    let rhs = 2.0 * PI * chi as f64 / area - int_omega / area;
    let slack = lambda1_sq - rhs;
    let mut r = Report::new("bar_bound");
    describe(&mut r, d, s);
    r.scalar("lambda1_sq", lambda1_sq).scalar("rhs", rhs).scalar("slack", slack).slack("slack", slack, tol);
    r.info("equality_detected", if slack < equality_factor * tol { 1.0 } else { 0.0 });
    if slack < equality_factor * tol {
        r.residual("killing_residual", killing_residual(d, s, psi, lambda)?, tol)
            .residual("omega_equality_residual", omega_equality_residual(s, psi), tol);
    }
    Ok(r)
}

/// `λ² ≤ (1/vol) ∫ (|T|² + S/4 + |Ω|/2)` on 3-manifolds; equality iff `|ψ|`
/// is constant and `Ω·ψ = i|Ω|ψ`.
pub fn verify_thm41(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda_sq: f64, tol: f64) -> Result<Report> {
    if d.dim() != 3 {
        return Err(Error::DomainKind("the 3-D eigenvalue bound is stated on 3-manifolds".into()));
    }
    let jet = field_jet(d, s, psi)?;
    let e = emt_from_jet(d, s, &jet, None)?;
    let vol = d.area();
    let integrand: Vec<f64> =
        (0..e.n_points()).map(|x| e.t_sq(x) + 0.25 * d.scalar_curvature(x) + 0.5 * s.omega_norm(x)).collect();
    let rhs = d.integrate(&integrand) / vol;
    let slack = rhs - lambda_sq;
    let u = &e.density;
    let mean = d.integrate(u) / vol;
    let var = u.iter().zip(&d.weights).map(|(v, w)| (v - mean).powi(2) * w).sum::<f64>() / vol;
    let scale = rhs.abs().max(lambda_sq.abs()).max(1.0);
    // the pointwise identity behind the bound, with Q included:
    // λ² = Δf − |du|²/4u² + |T|² + |Q|² + S/4 + (i/2 Ω·ψ, ψ)/u
    let ident: Vec<f64> = (0..e.n_points())
        .map(|x| {
            let gu2: f64 = (0..3).map(|i| (2.0 * e.grad_f[x][i]).powi(2)).sum();
            lambda_sq - (e.lap_f[x] - gu2 / 4.0 + e.t_sq(x) + e.q_sq(x) + 0.25 * d.scalar_curvature(x) + e.zeeman[x])
        })
        .collect();
    let mut r = Report::new("thm41");
    describe(&mut r, d, s);
    r.scalar("lambda_sq", lambda_sq)
        .scalar("rhs", rhs)
        .scalar("slack", slack)
        .slack("slack", slack, tol)
        .info("identity_residual_l2", masked_rms(d, &e, &density_weighted(&e, &ident)))
        .info("relative_slack", slack / scale)
        .info("density_relative_variance", var.sqrt() / mean)
        .info("omega_equality_residual", omega_equality_residual(s, psi));
    Ok(r)
}

/// Adds the equality-case checks of the 3-D bound (used for states expected to
/// attain it).
pub fn thm41_equality_checks(r: &mut Report, equality_rel: f64) {
    let get = |k: &str| r.value(k).unwrap_or(f64::NAN);
    let (rel, var, om) = (get("relative_slack"), get("density_relative_variance"), get("omega_equality_residual"));
    r.residual("equality_relative_slack", rel, equality_rel)
        .residual("equality_constant_density", var, equality_rel)
        .residual("equality_clifford", om, equality_rel);
}

/// Spin case `λ² = πχ/Area + (1/Area)∫|T|²`, with `∫det T` compared
/// against both `πχ` and `πχ/2`.
pub fn verify_fk_spin(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda: f64, tol: f64) -> Result<Report> {
    if s.degree != 0 {
        return Err(Error::InvalidArgument("the spin identity needs the trivial structure".into()));
    }
    let chi = d.euler.ok_or_else(|| Error::DomainKind("needs a closed surface".into()))? as f64;
    let e = d_eigen_emt(d, s, psi, lambda)?;
    let area = d.area();
    let int_t = masked_integral(d, &e, |x| e.t_sq(x));
    let rhs = PI * chi / area + int_t / area;
    let det_t: f64 = masked_integral(d, &e, |x| e.t[x][0][0] * e.t[x][1][1] - e.t[x][0][1] * e.t[x][1][0]);
    let mut r = Report::new("fk_spin");
    describe(&mut r, d, s);
    r.scalar("lhs", lambda * lambda)
        .scalar("rhs", rhs)
        .scalar("mean_t_sq", int_t / area)
        .scalar("integral_det_t", det_t)
        .residual("residual", lambda * lambda - rhs, tol)
        .info("det_t_minus_pi_chi", det_t - PI * chi)
        .info("det_t_minus_pi_chi_half", det_t - PI * chi / 2.0);
    mask_check(&mut r, &e);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleCase {
    /// `H² = πχ/Area + (1/4Area)∫|II|²` for closed CMC surfaces in ℝ³.
    R3Cmc,
    /// `H² + ½ = S/4 + |II|²/4` pointwise for CMC surfaces in S³.
    S3Cmc,
    /// `H² = S/4 + |II|²/4 − f²/2` pointwise for the S²×ℝ examples.
    S2rSurface,
}

/// Per-sample surface data for the example identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub scalar_curvature: f64,
    pub mean_curvature: f64,
    pub ii: [[f64; 2]; 2],
    pub f: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleData {
    pub label: String,
    pub case: ExampleCase,
    pub samples: Vec<SurfaceSample>,
    pub euler: Option<i32>,
}

fn ii_sq(s: &SurfaceSample) -> f64 {
    s.ii.iter().flatten().map(|v| v * v).sum()
}

pub fn verify_examples(data: &ExampleData, tol: f64) -> Result<Report> {
    let mut r = Report::new(format!("example_{}", data.label));
    r.meta("backend", "analytic");
    let pts = &data.samples;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("example data without samples".into()));
    }
    match data.case {
        ExampleCase::R3Cmc => {
            let chi = data.euler.ok_or_else(|| Error::InvalidArgument("closed surface needs χ".into()))? as f64;
            let area: f64 = pts.iter().map(|p| p.weight).sum();
            let int_ii: f64 = pts.iter().map(|p| ii_sq(p) * p.weight).sum();
            let h2 = pts.iter().map(|p| p.mean_curvature.powi(2) * p.weight).sum::<f64>() / area;
            let rhs = PI * chi / area + int_ii / (4.0 * area);
            r.scalar("lhs", h2).scalar("rhs", rhs).residual("residual", h2 - rhs, tol);
        }
        ExampleCase::S3Cmc | ExampleCase::S2rSurface => {
            let res: Vec<f64> = pts
                .iter()
                .map(|p| {
                    let h2 = p.mean_curvature.powi(2);
                    if data.case == ExampleCase::S3Cmc {
                        h2 + 0.5 - (0.25 * p.scalar_curvature + 0.25 * ii_sq(p))
                    } else {
                        h2 - (0.25 * p.scalar_curvature + 0.25 * ii_sq(p) - 0.5 * p.f * p.f)
                    }
                })
                .collect();
            let p0 = &pts[0];
            let lhs0 = p0.mean_curvature.powi(2) + if data.case == ExampleCase::S3Cmc { 0.5 } else { 0.0 };
            r.scalar("lhs", lhs0)
                .scalar("rhs", lhs0 - res[0])
                .residual("residual_linf", res.iter().map(|v| v.abs()).fold(0.0, f64::max), tol);
        }
    }
    Ok(r)
}
