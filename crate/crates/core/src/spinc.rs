//! Spin^c structures, spinor fields, and pointwise Clifford operations.
//!
//! On the tori the auxiliary bundle `L` carries a uniform field in the
//! `(x, y)` plane, realized in Landau gauge. Spinors couple to half of the
//! connection of `L`, so the stored links `U_μ(x)` are the spinor links and
//! the links of `L` are their squares. The degree `d` labels the twisting
//! bundle `L^{1/2}`: the `L` flux is `4πd`, the spinor flux `2πd`, and `D`
//! has index `d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{self, Spinor};
use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SpincStructure {
    pub degree: i32,
    pub kind: DomainKind,
    /// Curvature `(Ω₁₂, Ω₁₃, Ω₂₃)` per point, in the orthonormal frame.
    pub omega: Vec<[f64; 3]>,
    /// Spinor link phases `U_μ(x)` on the edge `x → x + e_μ`, per axis.
    pub links: Vec<Vec<Complex64>>,
    /// Doubled spin weight of `Σ⁺` (sphere backend).
    pub spin_weight2: Option<i32>,
}

impl SpincStructure {
    pub fn omega12(&self, idx: usize) -> f64 {
        self.omega[idx][0]
    }

    /// `|Ω|_g` at a point.
    pub fn omega_norm(&self, idx: usize) -> f64 {
        let o = self.omega[idx];
        (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt()
    }

    /// Link phases of the auxiliary bundle `L` (full weight).
    pub fn line_links(&self, axis: usize) -> Vec<Complex64> {
        self.links[axis].iter().map(|u| u * u).collect()
    }

    /// Product of the `L` links around the plaquette at `x` in the `(a, b)` plane.
    pub fn plaquette(&self, d: &Domain, idx: usize, a: usize, b: usize) -> Complex64 {
        let x = d.lattice_coords(idx);
        let shift = |mut c: [i64; 3], ax: usize| {
            c[ax] += 1;
            d.lattice_index(c)
        };
        let u = |ax: usize, i: usize| self.links[ax][i] * self.links[ax][i];
        let xa = shift(x, a);
        let xb = shift(x, b);
        u(a, idx) * u(b, xa) * u(a, xb).conj() * u(b, idx).conj()
    }

    /// Applies the gauge transformation `ψ ↦ e^{iλ}ψ`:
    /// `U_μ(x) ↦ e^{iλ(x)} U_μ(x) e^{-iλ(x+μ)}`.
    pub fn gauge_transform(&self, d: &Domain, lambda: &[f64]) -> Result<Self> {
        if !d.is_torus() {
            return Err(Error::Unsupported("gauge transforms act on lattice links only".into()));
        }
        let mut out = self.clone();
        for (ax, links) in out.links.iter_mut().enumerate() {
            for (idx, u) in links.iter_mut().enumerate() {
                let mut c = d.lattice_coords(idx);
                c[ax] += 1;
                let next = d.lattice_index(c);
                *u *= Complex64::from_polar(1.0, lambda[idx] - lambda[next]);
            }
        }
        Ok(out)
    }
}

/// Builds the uniform-curvature Spin^c structure of the given degree.
pub fn make_spinc(d: &Domain, degree: i32) -> Result<SpincStructure> {
    match d.kind {
        DomainKind::SphereLadder => {
            if degree % 2 != 0 {
                return Err(Error::SpincObstruction(format!(
                    "degree {degree} is odd; the sphere admits only even degrees"
                )));
            }
            // Σ⁺ has spin weight -1/2 + d/4, so the index is d/2 and Ω₁₂ = -d/2.
            Ok(SpincStructure {
                degree,
                kind: d.kind,
                omega: vec![[-(degree as f64) / 2.0, 0.0, 0.0]; d.n_points()],
                links: Vec::new(),
                spin_weight2: Some(-1 + degree / 2),
            })
        }
        DomainKind::Torus2 | DomainKind::Torus3 => {
            let (n1, n2) = (d.n[0], d.n[1]);
            if n1 != n2 {
                return Err(Error::Assembly("flux lattice needs equal samples on the flux axes".into()));
            }
            let n = n1;
            let area = d.lengths[0] * d.lengths[1];
            let om = 4.0 * PI * degree as f64 / area;
            // spinor flux per plaquette; φ N² = 2πd keeps the wrap consistent
            let phi = 2.0 * PI * degree as f64 / (n * n) as f64;
            let np = d.n_points();
            let mut links = vec![vec![Complex64::new(1.0, 0.0); np]; d.dim()];
            for idx in 0..np {
                let c = d.lattice_coords(idx);
                links[0][idx] = Complex64::from_polar(1.0, -phi * c[1] as f64);
                if c[1] as usize == n - 1 {
                    links[1][idx] = Complex64::from_polar(1.0, phi * (n as f64) * c[0] as f64);
                }
            }
            Ok(SpincStructure { degree, kind: d.kind, omega: vec![[om, 0.0, 0.0]; np], links, spin_weight2: None })
        }
        DomainKind::Patch2 => Err(Error::Unsupported("Spin^c structures on chart patches come from immersion data".into())),
    }
}

/// Complex 2-component section sampled on a domain. On the sphere the
/// spectral coefficients are kept alongside the grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub values: Vec<Spinor>,
    pub coeffs: Option<Vec<Complex64>>,
}

impl SpinorField {
    pub fn new(values: Vec<Spinor>) -> Self {
        Self { values, coeffs: None }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Spinor::zeros(); n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Interleaved component vector `[ψ₁(x₀), ψ₂(x₀), ψ₁(x₁), …]`.
    pub fn flat(&self) -> Vec<Complex64> {
        self.values.iter().flat_map(|v| [v[0], v[1]]).collect()
    }

    pub fn from_flat(flat: &[Complex64]) -> Self {
        Self::new(flat.chunks(2).map(|c| Spinor::new(c[0], c[1])).collect())
    }

    /// `ψ⁺` (positive chirality part).
    pub fn plus(&self) -> Self {
        Self::new(self.values.iter().map(|v| Spinor::new(v[0], Complex64::new(0.0, 0.0))).collect())
    }

    /// `ψ⁻` (negative chirality part).
    pub fn minus(&self) -> Self {
        Self::new(self.values.iter().map(|v| Spinor::new(Complex64::new(0.0, 0.0), v[1])).collect())
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(clifford::norm_sq).collect()
    }

    /// `‖ψ‖² = Σ |ψ|² w`.
    pub fn norm_sq(&self, d: &Domain) -> f64 {
        d.integrate(&self.density())
    }

    /// Weighted Hermitian product `Σ ⟨φ, ψ⟩ w` (antilinear in `self`).
    pub fn inner(&self, other: &Self, d: &Domain) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(&d.weights)
            .map(|((a, b), w)| (a[0].conj() * b[0] + a[1].conj() * b[1]) * *w)
            .sum()
    }

    /// Fraction of the weighted norm carried by `Σ⁺`.
    pub fn plus_fraction(&self, d: &Domain) -> f64 {
        let p: Vec<f64> = self.values.iter().map(|v| v[0].norm_sqr()).collect();
        d.integrate(&p) / self.norm_sq(d)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            coeffs: self.coeffs.as_ref().map(|cs| cs.iter().map(|x| x * c).collect()),
        }
    }

    pub fn map(&self, f: impl Fn(usize, &Spinor) -> Spinor) -> Self {
        Self::new(self.values.iter().enumerate().map(|(i, v)| f(i, v)).collect())
    }

    /// `ψ ↦ e^{iλ}ψ`, matching [`SpincStructure::gauge_transform`].
    pub fn gauge_transform(&self, lambda: &[f64]) -> Self {
        self.map(|i, v| v * Complex64::from_polar(1.0, lambda[i]))
    }
}

/// `ψ̄ = i e₁·e₂·ψ = (ψ⁺, −ψ⁻)`.
pub fn bar(d: &Domain, psi: &SpinorField) -> Result<SpinorField> {
    if d.dim() != 2 {
        return Err(Error::DomainKind("bar is defined on surfaces only".into()));
    }
    Ok(psi.map(|_, v| clifford::bar(v)))
}

/// `Ω·ψ = Σ_{i<j} Ω_ij e_i·e_j·ψ`.
pub fn omega_clifford(s: &SpincStructure, psi: &SpinorField) -> SpinorField {
    if s.kind.dim() == 2 {
        psi.map(|i, v| clifford::omega2(s.omega[i][0], v))
    } else {
        psi.map(|i, v| clifford::omega3(s.omega[i], v))
    }
}

/// Pointwise slack of `(iΩ·ψ, ψ) ≥ −(c_n/2)|Ω||ψ|²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliffordEstimate {
    pub slack: Vec<f64>,
    pub equality: Vec<bool>,
    /// Largest `|Ω·ψ − i(c_n/2)|Ω|ψ|` over the equality points.
    pub equality_residual: f64,
    pub min_slack: f64,
}

pub fn clifford_estimate_check(s: &SpincStructure, psi: &SpinorField, tol: f64) -> CliffordEstimate {
    let cn = clifford::c_n(s.kind.dim());
    let om = omega_clifford(s, psi);
    let i = Complex64::i();
    let mut slack = Vec::with_capacity(psi.len());
    let mut equality = Vec::with_capacity(psi.len());
    let mut eq_res: f64 = 0.0;
    for (k, (v, ov)) in psi.values.iter().zip(&om.values).enumerate() {
        let nrm = s.omega_norm(k);
        let sl = clifford::re_dot(&(ov * i), v) + 0.5 * cn * nrm * clifford::norm_sq(v);
        let eq = sl < tol;
        if eq {
            eq_res = eq_res.max((ov - v * (i * 0.5 * cn * nrm)).norm());
        }
        slack.push(sl);
        equality.push(eq);
    }
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    CliffordEstimate { slack, equality, equality_residual: eq_res, min_slack }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{build_sphere_ladder, build_torus2, build_torus3};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn canonical_sphere_structure() {
        let d = build_sphere_ladder(4).unwrap();
        let s = make_spinc(&d, 2).unwrap();
        assert!(s.omega.iter().all(|o| o[0] == -1.0));
        let total: f64 = d.integrate(&(0..d.n_points()).map(|k| s.omega_norm(k)).collect::<Vec<_>>());
        assert!((total - 4.0 * PI).abs() < 1e-12);
        assert_eq!(s.spin_weight2, Some(0));
        assert!(matches!(make_spinc(&d, 3), Err(Error::SpincObstruction(_))));
        // (i/2)Ω· on a pure Σ⁺ spinor balances S/4 = 1/2
        let psi = SpinorField::new(vec![Spinor::new(c(1.0, 0.0), c(0.0, 0.0)); d.n_points()]);
        let om = omega_clifford(&s, &psi);
        let v = om.values[0] * c(0.0, 0.5);
        assert!((v - psi.values[0] * c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn torus_flux_and_plaquettes() {
        let d = build_torus2(2.0 * PI, 2.0 * PI, 16).unwrap();
        let s0 = make_spinc(&d, 0).unwrap();
        assert!(s0.links.iter().flatten().all(|u| *u == c(1.0, 0.0)));
        assert!(s0.omega.iter().all(|o| o[0] == 0.0));
        let s = make_spinc(&d, 3).unwrap();
        let flux: f64 = d.integrate(&s.omega.iter().map(|o| o[0]).collect::<Vec<_>>());
        // L carries twice the spinor flux 2πd
        assert!((flux - 12.0 * PI).abs() < 1e-12);
        let w = d.weights[0];
        for idx in 0..d.n_points() {
            let p = s.plaquette(&d, idx, 0, 1);
            assert!((p - Complex64::from_polar(1.0, s.omega12(idx) * w)).norm() < 1e-12, "plaquette {idx}");
        }
    }

    #[test]
    fn torus3_plaquettes() {
        let d = build_torus3([2.0 * PI; 3], 6).unwrap();
        let s = make_spinc(&d, 1).unwrap();
        let h2 = d.h[0] * d.h[1];
        for idx in 0..d.n_points() {
            assert!((s.plaquette(&d, idx, 0, 1) - Complex64::from_polar(1.0, s.omega12(idx) * h2)).norm() < 1e-12);
            assert!((s.plaquette(&d, idx, 0, 2) - 1.0).norm() < 1e-12);
            assert!((s.plaquette(&d, idx, 1, 2) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_transform_preserves_plaquettes() {
        let d = build_torus2(2.0 * PI, 2.0 * PI, 8).unwrap();
        let s = make_spinc(&d, 1).unwrap();
        let lambda: Vec<f64> = (0..d.n_points()).map(|k| (k as f64 * 0.37).sin() * 2.0).collect();
        let g = s.gauge_transform(&d, &lambda).unwrap();
        for idx in 0..d.n_points() {
            assert!((g.plaquette(&d, idx, 0, 1) - s.plaquette(&d, idx, 0, 1)).norm() < 1e-12);
        }
    }

    #[test]
    fn bar_and_chirality() {
        let d = build_torus2(1.0, 1.0, 4).unwrap();
        let psi = SpinorField::new((0..16).map(|k| Spinor::new(c(k as f64, 1.0), c(-1.0, 0.5 * k as f64))).collect());
        let b = bar(&d, &psi).unwrap();
        assert_eq!(bar(&d, &b).unwrap(), psi);
        assert_eq!(bar(&d, &psi.plus()).unwrap(), psi.plus());
        for (v, bv) in psi.values.iter().zip(&b.values) {
            let want = v[0].norm_sqr() - v[1].norm_sqr();
            assert!((clifford::re_dot(v, bv) - want).abs() < 1e-12);
        }
        let d3 = build_torus3([1.0; 3], 4).unwrap();
        assert!(bar(&d3, &SpinorField::zeros(64)).is_err());
    }

    #[test]
    fn clifford_estimate_cases() {
        let d = build_torus2(2.0 * PI, 2.0 * PI, 8).unwrap();
        let s = make_spinc(&d, 1).unwrap();
        let np = d.n_points();
        let neg = SpinorField::new(vec![Spinor::new(c(0.0, 0.0), c(0.3, -0.4)); np]);
        let est = clifford_estimate_check(&s, &neg, 1e-12);
        assert!(est.equality.iter().all(|&e| e));
        assert!(est.slack.iter().all(|x| x.abs() < 1e-14));
        assert!(est.equality_residual < 1e-14);
        let mixed = SpinorField::new(vec![Spinor::new(c(0.2, 0.0), c(0.3, -0.4)); np]);
        let est = clifford_estimate_check(&s, &mixed, 1e-12);
        assert!(est.slack.iter().all(|&x| x > 0.0));
        let s0 = make_spinc(&d, 0).unwrap();
        let est = clifford_estimate_check(&s0, &mixed, 1e-12);
        assert!(est.slack.iter().all(|&x| x == 0.0));
        assert!(omega_clifford(&s0, &mixed).values.iter().all(|v| v.norm() == 0.0));
    }
}
