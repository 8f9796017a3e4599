//! Dirac operators: `D²` on every backend, `D` and `D̃` on the sphere.
//!
//! On the lattices `D²` is assembled through the Schrödinger–Lichnerowicz
//! formula `D² = ∇*∇ + S/4 + (i/2)Ω·` with the magnetic 5-/7-point Laplacian,
//! which avoids the doublers of a squared central-difference `D`. The
//! Zeeman coefficient `Ω₁₂/2` is replaced by `sign(d)·E₀`, where `E₀` is the
//! ground energy of the scalar lattice Landau problem; it converges to
//! `|Ω₁₂|/2` at `O(h²)` and makes the discrete kernel exact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::Spinor;
use crate::domains::{build_torus2, Domain, DomainKind};
use crate::error::{Error, Result};
use crate::linalg::{cnorm, eigsh_nearest, CsrMatrix, EigenConfig, SolveMethod};
use crate::sphere::SpinorSpace;
use crate::spinc::{make_spinc, SpincStructure, SpinorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    D,
    DSquared,
    DTilde,
}

#[derive(Debug, Clone)]
pub struct OperatorHandle {
    pub which: OperatorKind,
    pub backend: DomainKind,
    /// Matrix in grid components (lattices, interleaved `2x + c`) or in
    /// harmonic coefficients (sphere, `[Σ⁺ | Σ⁻]`).
    pub matrix: CsrMatrix,
    /// Coefficient of `diag(1, −1)` used for `(i/2)Ω·`.
    pub zeeman: f64,
    pub space: Option<SpinorSpace>,
    /// Known lower bound of the spectrum (0 for `D²`).
    pub lower_bound: Option<f64>,
}

impl OperatorHandle {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(x)
    }

    /// Applies the operator to a field; sphere fields must carry coefficients.
    pub fn apply(&self, d: &Domain, psi: &SpinorField) -> Result<SpinorField> {
        match &self.space {
            Some(space) => {
                let c = psi
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("sphere field without coefficients".into()))?;
                Ok(sphere_field(d, space, self.apply_vec(c)))
            }
            None => Ok(SpinorField::from_flat(&self.apply_vec(&psi.flat()))),
        }
    }

    pub fn dense(&self) -> Option<nalgebra::DMatrix<Complex64>> {
        (self.dim() <= 5000).then(|| self.matrix.to_dense())
    }

    /// `max |⟨Aφ, ψ⟩ − ⟨φ, Aψ⟩| / (‖φ‖‖ψ‖)` over random pairs.
    pub fn self_adjoint_defect(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let mut rv = || -> Vec<Complex64> {
                (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
            };
            let (a, b) = (rv(), rv());
            let lhs = crate::linalg::cdot(&self.apply_vec(&a), &b);
            let rhs = crate::linalg::cdot(&a, &self.apply_vec(&b));
            worst = worst.max((lhs - rhs).norm() / (cnorm(&a) * cnorm(&b)));
        }
        worst
    }
}

/// Field with the given sphere coefficients and its grid values.
pub fn sphere_field(d: &Domain, space: &SpinorSpace, coeffs: Vec<Complex64>) -> SpinorField {
    let grid = d.sphere.as_ref().expect("sphere domain");
    let jet_free = {
        let (cp, cm) = space.split(&coeffs);
        let vp = space.plus.synthesize(cp, grid);
        let vm = space.minus.synthesize(cm, grid);
        vp.into_iter().zip(vm).map(|(a, b)| Spinor::new(a, -Complex64::i() * b)).collect()
    };
    SpinorField { values: jet_free, coeffs: Some(coeffs) }
}

pub fn sphere_space(d: &Domain, s: &SpincStructure) -> Result<SpinorSpace> {
    match (d.kind, s.spin_weight2, d.l_max) {
        (DomainKind::SphereLadder, Some(ts), Some(l)) => Ok(SpinorSpace::new(ts, l)),
        _ => Err(Error::Unsupported(format!("first-order operators need the sphere backend, got {}", d.kind.name()))),
    }
}

fn check_compatible(d: &Domain, s: &SpincStructure) -> Result<()> {
    if d.kind != s.kind || s.omega.len() != d.n_points() {
        return Err(Error::Assembly(format!(
            "structure built for {} does not match {} domain",
            s.kind.name(),
            d.kind.name()
        )));
    }
    Ok(())
}

/// Magnetic Bochner Laplacian with `ncomp` interleaved components per site.
fn magnetic_laplacian(d: &Domain, s: &SpincStructure, ncomp: usize) -> Vec<(usize, usize, Complex64)> {
    let np = d.n_points();
    let mut trip = Vec::with_capacity(np * ncomp * (1 + 2 * d.dim()));
    for x in 0..np {
        let cx = d.lattice_coords(x);
        let mut diag = 0.0;
        for ax in 0..d.dim() {
            let h2 = d.h[ax] * d.h[ax];
            diag += 2.0 / h2;
            let mut c = cx;
            c[ax] += 1;
            let xp = d.lattice_index(c);
            let u = s.links[ax][x];
            for k in 0..ncomp {
                // −U_μ(x)ψ(x+μ) and its adjoint
                trip.push((ncomp * x + k, ncomp * xp + k, -u / h2));
                trip.push((ncomp * xp + k, ncomp * x + k, -u.conj() / h2));
            }
        }
        for k in 0..ncomp {
            trip.push((ncomp * x + k, ncomp * x + k, Complex64::new(diag, 0.0)));
        }
    }
    trip
}

/// Ground energy of the scalar magnetic Laplacian in the flux plane.
pub fn landau_ground_energy(d: &Domain, degree: i32) -> Result<f64> {
    if degree == 0 {
        return Ok(0.0);
    }
    let plane = build_torus2(d.lengths[0], d.lengths[1], d.n[0])?;
    let s = make_spinc(&plane, degree)?;
    let a = CsrMatrix::from_triplets(plane.n_points(), magnetic_laplacian(&plane, &s, 1));
    let cfg = EigenConfig { tol: 1e-12, ..Default::default() };
    let res = eigsh_nearest(&a, 1, 0.0, Some(0.0), &cfg)?;
    Ok(res.values[0])
}

/// `D²` through the Schrödinger–Lichnerowicz formula.
pub fn assemble_dsq(d: &Domain, s: &SpincStructure) -> Result<OperatorHandle> {
    check_compatible(d, s)?;
    match d.kind {
        DomainKind::Torus2 | DomainKind::Torus3 => {
            let zeeman = s.degree.signum() as f64 * landau_ground_energy(d, s.degree)?;
            let mut trip = magnetic_laplacian(d, s, 2);
            for x in 0..d.n_points() {
                let sc = 0.25 * d.scalar_curvature(x);
                trip.push((2 * x, 2 * x, Complex64::new(sc + zeeman, 0.0)));
                trip.push((2 * x + 1, 2 * x + 1, Complex64::new(sc - zeeman, 0.0)));
            }
            Ok(OperatorHandle {
                which: OperatorKind::DSquared,
                backend: d.kind,
                matrix: CsrMatrix::from_triplets(2 * d.n_points(), trip),
                zeeman,
                space: None,
                lower_bound: Some(0.0),
            })
        }
        DomainKind::SphereLadder => {
            let space = sphere_space(d, s)?;
            let zeeman = 0.5 * s.omega12(0);
            let quarter_s = 0.25 * d.scalar_curvature(0);
            let mut diag = Vec::with_capacity(space.dim());
            for &(tl, _) in &space.plus.labels {
                diag.push(space.rough_laplacian(space.plus.ts, tl) + quarter_s + zeeman);
            }
            for &(tl, _) in &space.minus.labels {
                diag.push(space.rough_laplacian(space.minus.ts, tl) + quarter_s - zeeman);
            }
            Ok(OperatorHandle {
                which: OperatorKind::DSquared,
                backend: d.kind,
                matrix: CsrMatrix::diagonal(&diag),
                zeeman,
                space: Some(space),
                lower_bound: Some(0.0),
            })
        }
        DomainKind::Patch2 => Err(Error::Unsupported("D² is not assembled on chart patches".into())),
    }
}

fn sphere_first_order(d: &Domain, s: &SpincStructure, which: OperatorKind) -> Result<OperatorHandle> {
    check_compatible(d, s)?;
    let space = sphere_space(d, s)?;
    let mut trip = Vec::new();
    for (a, b, mu) in space.couplings() {
        let (ab, ba) = match which {
            OperatorKind::D => (Complex64::new(mu, 0.0), Complex64::new(mu, 0.0)),
            // D̃ = −iωD
            _ => (Complex64::new(0.0, -mu), Complex64::new(0.0, mu)),
        };
        trip.push((a, b, ab));
        trip.push((b, a, ba));
    }
    Ok(OperatorHandle {
        which,
        backend: d.kind,
        matrix: CsrMatrix::from_triplets(space.dim(), trip),
        zeeman: 0.5 * s.omega12(0),
        space: Some(space),
        lower_bound: None,
    })
}

/// `D = Σ e_i·∇_{e_i}` on the sphere, off-diagonal between chiralities.
pub fn assemble_d_sphere(d: &Domain, s: &SpincStructure) -> Result<OperatorHandle> {
    sphere_first_order(d, s, OperatorKind::D)
}

/// `D̃ = e₂·∇_{e₁} − e₁·∇_{e₂}` on the sphere.
pub fn assemble_dtilde_sphere(d: &Domain, s: &SpincStructure) -> Result<OperatorHandle> {
    sphere_first_order(d, s, OperatorKind::DTilde)
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit-norm eigenspinor in the weighted product.
    pub spinor: SpinorField,
    pub residual: f64,
}

/// The `k` eigenpairs nearest `shift`, ascending.
pub fn eigenpairs(op: &OperatorHandle, d: &Domain, k: usize, shift: f64, cfg: &EigenConfig) -> Result<Vec<Eigenpair>> {
    let res = eigsh_nearest(&op.matrix, k, shift, op.lower_bound, cfg)?;
    let w = if op.space.is_some() { 1.0 } else { d.weights[0] };
    Ok(res
        .values
        .iter()
        .zip(res.vectors)
        .zip(&res.residuals)
        .map(|((&value, v), &residual)| {
            let spinor = match &op.space {
                Some(space) => sphere_field(d, space, v),
                None => SpinorField::from_flat(&v.iter().map(|z| z / w.sqrt()).collect::<Vec<_>>()),
            };
            Eigenpair { value, spinor, residual }
        })
        .collect())
}

/// Which solver `Auto` resolves to is recorded for diagnostics only.
pub fn describe_method(m: SolveMethod) -> &'static str {
    match m {
        SolveMethod::Auto => "auto",
        SolveMethod::Dense => "dense",
        SolveMethod::ShiftInvertBanded => "shift_invert_banded",
        SolveMethod::ShiftInvertCg => "shift_invert_cg",
    }
}

/// Spectrum table with columns
/// `index,lambda_sq,lambda_or_nan,chirality_plus_fraction,residual`.
pub fn spectrum_csv(d: &Domain, pairs: &[Eigenpair], lambdas: Option<&[f64]>) -> String {
    let mut out = String::from("index,lambda_sq,lambda_or_nan,chirality_plus_fraction,residual\n");
    for (i, p) in pairs.iter().enumerate() {
        let lam = lambdas.and_then(|l| l.get(i).copied()).unwrap_or(f64::NAN);
        let lam_sq = if lambdas.is_some() { lam * lam } else { p.value };
        out.push_str(&format!(
            "{i},{:.16e},{},{:.16e},{:.16e}\n",
            lam_sq,
            if lam.is_nan() { "nan".to_string() } else { format!("{lam:.16e}") },
            p.spinor.plus_fraction(d),
            p.residual
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_sphere_ladder, build_torus3};
    use std::f64::consts::PI;

    #[test]
    fn flat_torus_spectrum() {
        let d = build_torus2(2.0 * PI, 2.0 * PI, 32).unwrap();
        let s = make_spinc(&d, 0).unwrap();
        let op = assemble_dsq(&d, &s).unwrap();
        assert!(op.matrix.hermitian_defect() < 1e-12);
        let pairs = eigenpairs(&op, &d, 3, 0.0, &EigenConfig::default()).unwrap();
        // lattice eigenvalue (4/h²) sin²(h/2) for |k| = 1
        let h = d.h[0];
        let one = 4.0 / (h * h) * (h / 2.0).sin().powi(2);
        assert!(pairs[0].value.abs() < 1e-9 && pairs[1].value.abs() < 1e-9);
        assert!((pairs[2].value - one).abs() < 1e-9);
        // the 5-point stencil misses the continuum value by h²/12
        assert!((pairs[2].value - (1.0 - h * h / 12.0)).abs() < 1e-5);
        for p in &pairs {
            assert!((p.spinor.norm_sq(&d) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn torus_kernel_dimension_and_chirality() {
        for deg in [1, -2] {
            let d = build_torus2(2.0 * PI, 2.0 * PI, 16).unwrap();
            let s = make_spinc(&d, deg).unwrap();
            let op = assemble_dsq(&d, &s).unwrap();
            let k = deg.unsigned_abs() as usize;
            let pairs = eigenpairs(&op, &d, k + 1, 0.0, &EigenConfig::default()).unwrap();
            for p in &pairs[..k] {
                assert!(p.value.abs() < 1e-9, "{}", p.value);
                let frac = p.spinor.plus_fraction(&d);
                assert!(if deg > 0 { frac < 1e-9 } else { frac > 1.0 - 1e-9 });
            }
            assert!(pairs[k].value > 0.1);
        }
    }

    #[test]
    fn sphere_d_squares_to_dsq() {
        for deg in [0, 2, -2, 4] {
            let d = build_sphere_ladder(6).unwrap();
            let s = make_spinc(&d, deg).unwrap();
            let dsq = assemble_dsq(&d, &s).unwrap();
            let dd = assemble_d_sphere(&d, &s).unwrap();
            let dt = assemble_dtilde_sphere(&d, &s).unwrap();
            let prod = dd.matrix.mul(&dd.matrix);
            let prod_t = dt.matrix.mul(&dt.matrix);
            let diff = (prod.to_dense() - dsq.matrix.to_dense()).norm();
            let diff_t = (prod_t.to_dense() - dsq.matrix.to_dense()).norm();
            assert!(diff < 1e-10 && diff_t < 1e-10, "deg {deg}: {diff} {diff_t}");
            assert!(dd.self_adjoint_defect(5, 1) < 1e-12);
            assert!(dt.self_adjoint_defect(5, 2) < 1e-12);
        }
    }

    #[test]
    fn sphere_d_matches_pointwise_clifford() {
        let d = build_sphere_ladder(5).unwrap();
        let grid = d.sphere.as_ref().unwrap();
        for deg in [0, 2, 4] {
            let s = make_spinc(&d, deg).unwrap();
            let op = assemble_d_sphere(&d, &s).unwrap();
            let space = op.space.clone().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let c: Vec<Complex64> =
                (0..space.dim()).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let jet = space.jet(&c, grid);
            let dpsi = sphere_field(&d, &space, op.apply_vec(&c));
            for p in 0..d.n_points() {
                let g1 = Spinor::new(jet.grad[0][p][0], jet.grad[0][p][1]);
                let g2 = Spinor::new(jet.grad[1][p][0], jet.grad[1][p][1]);
                let pointwise = crate::clifford::e2(0) * g1 + crate::clifford::e2(1) * g2;
                assert!((pointwise - dpsi.values[p]).norm() < 1e-10, "deg {deg} point {p}");
            }
        }
    }

    #[test]
    fn sphere_spectra() {
        let d = build_sphere_ladder(8).unwrap();
        let spin = make_spinc(&d, 0).unwrap();
        let op = assemble_d_sphere(&d, &spin).unwrap();
        // D eigenvalue +1 has multiplicity 2; the next nearest are the +2 level
        let pairs = eigenpairs(&op, &d, 6, 1.0, &EigenConfig::default()).unwrap();
        assert!(pairs[..2].iter().all(|p| (p.value - 1.0).abs() < 1e-10));
        assert!(pairs[2..].iter().all(|p| (p.value - 2.0).abs() < 1e-10));
        let canon = make_spinc(&d, 2).unwrap();
        let dsq = assemble_dsq(&d, &canon).unwrap();
        let pairs = eigenpairs(&dsq, &d, 2, 0.0, &EigenConfig::default()).unwrap();
        assert!(pairs[0].value.abs() < 1e-12 && pairs[1].value > 0.5);
        assert!(pairs[0].residual < 1e-12);
        assert!((pairs[0].spinor.plus_fraction(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus3_ground_state() {
        let d = build_torus3([2.0 * PI; 3], 8).unwrap();
        let s = make_spinc(&d, 1).unwrap();
        let op = assemble_dsq(&d, &s).unwrap();
        let pairs = eigenpairs(&op, &d, 2, 0.0, &EigenConfig::default()).unwrap();
        assert!(pairs[0].value.abs() < 1e-9);
        assert!(pairs[1].value > 0.1);
    }

    #[test]
    fn incompatible_structure_is_rejected() {
        let d = build_torus2(1.0, 1.0, 8).unwrap();
        let other = build_torus2(1.0, 1.0, 6).unwrap();
        let s = make_spinc(&other, 1).unwrap();
        assert!(matches!(assemble_dsq(&d, &s), Err(Error::Assembly(_))));
        let s = make_spinc(&d, 1).unwrap();
        assert!(matches!(assemble_d_sphere(&d, &s), Err(Error::Unsupported(_))));
    }
}
