//! Spectral backend for the unit round sphere.
//!
//! Sections of spin weight `s` are expanded in spin-weighted spherical
//! harmonics `ₛY_lm`. Half-integer labels are carried as doubled integers
//! (`tl = 2l`, `ts = 2s`, `tm = 2m`). With
//! `ð f = -(∂_θ + i cscθ ∂_φ - s cotθ) f` the ladder relations are
//!
//! ```text
//! ð ₛY_lm =  sqrt((l - s)(l + s + 1)) ₛ₊₁Y_lm
//! ð̄ ₛY_lm = -sqrt((l + s)(l - s + 1)) ₛ₋₁Y_lm
//! ```
//!
//! and in the frame `(e_θ, e_φ)` the covariant derivatives are
//! `∇_θ = -(ð + ð̄)/2`, `∇_φ = i(ð - ð̄)/2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Wigner small-d matrix `d^j_{m'm}(β) = ⟨jm'| exp(-iβJ_y) |jm⟩` for
/// `j = tj/2`, indexed by `(j - m', j - m)`. Built from the eigenbasis of
/// `J_y`, which avoids the cancellation of the explicit factorial sum.
#[derive(Debug, Clone)]
pub struct WignerD {
    tj: i32,
    vecs: DMatrix<Complex64>,
    vals: Vec<f64>,
}

impl WignerD {
    pub fn new(tj: i32) -> Self {
        let dim = (tj + 1) as usize;
        let j = tj as f64 / 2.0;
        // basis index a ↔ m = j - a
        let mut jy = DMatrix::<Complex64>::zeros(dim, dim);
        for a in 1..dim {
            let m = j - a as f64; // J_+ |m⟩ = c |m+1⟩, |m+1⟩ has index a-1
            let c = ((j - m) * (j + m + 1.0)).sqrt();
            // J_y = (J_+ - J_-)/(2i)
            jy[(a - 1, a)] = Complex64::new(0.0, -c / 2.0);
            jy[(a, a - 1)] = Complex64::new(0.0, c / 2.0);
        }
        let eig = nalgebra::SymmetricEigen::new(jy);
        Self { tj, vecs: eig.eigenvectors, vals: eig.eigenvalues.iter().copied().collect() }
    }

    pub fn matrix(&self, beta: f64) -> DMatrix<f64> {
        let dim = (self.tj + 1) as usize;
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            self.vals.iter().map(|&mu| Complex64::from_polar(1.0, -beta * mu)),
        ));
        let full = &self.vecs * phases * self.vecs.adjoint();
        full.map(|z| z.re)
    }

    /// `d^j_{m'm}` from doubled labels.
    pub fn entry(mat: &DMatrix<f64>, tj: i32, tmp: i32, tm: i32) -> f64 {
        mat[(((tj - tmp) / 2) as usize, ((tj - tm) / 2) as usize)]
    }
}

type WignerCache = HashMap<(i32, Vec<u64>), Arc<Vec<DMatrix<f64>>>>;

/// Wigner matrices for one `tl` at every latitude, memoised per grid.
fn wigner_on_grid(tl: i32, theta: &[f64]) -> Arc<Vec<DMatrix<f64>>> {
    static CACHE: OnceLock<Mutex<WignerCache>> = OnceLock::new();
    let key = (tl, theta.iter().map(|t| t.to_bits()).collect::<Vec<_>>());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return hit.clone();
    }
    let wd = WignerD::new(tl);
    let mats = Arc::new(theta.iter().map(|&t| wd.matrix(t)).collect::<Vec<_>>());
    cache.lock().unwrap().insert(key, mats.clone());
    mats
}

/// Spin-weighted harmonic `ₛY_lm(θ, φ)` from doubled labels.
pub fn swsh(ts: i32, tl: i32, tm: i32, theta: f64, phi: f64) -> Complex64 {
    let w = WignerD::new(tl);
    let d = w.matrix(theta);
    let tl_f = tl as f64 / 2.0;
    let norm = ((2.0 * tl_f + 1.0) / (4.0 * PI)).sqrt();
    let val = norm * swsh_sign(ts, tm) * WignerD::entry(&d, tl, tm, -ts);
    Complex64::from_polar(val, tm as f64 / 2.0 * phi)
}

/// Phase convention that makes the ladder relations hold with the stated signs.
fn swsh_sign(ts: i32, _tm: i32) -> f64 {
    // (-1)^{s} restricted to the integer part keeps ð and ð̄ real-positive/negative
    if (ts.div_euclid(2)).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Latitude-longitude quadrature grid with Gauss-Legendre latitudes.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub lat_weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        // θ ascending from the north pole
        let theta: Vec<f64> = x.iter().rev().map(|c| c.acos()).collect();
        let lat_weights: Vec<f64> = w.iter().rev().copied().collect();
        let phi = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Self { theta, phi, lat_weights }
    }

    pub fn n_points(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    /// Point index `i_θ · n_φ + j_φ`.
    pub fn weights(&self) -> Vec<f64> {
        let dphi = 2.0 * PI / self.phi.len() as f64;
        self.lat_weights
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w * dphi, self.phi.len()))
            .collect()
    }

    pub fn coords(&self) -> Vec<[f64; 3]> {
        self.theta
            .iter()
            .flat_map(|&t| self.phi.iter().map(move |&p| [t, p, 0.0]))
            .collect()
    }
}

/// Truncated harmonic basis for one spin weight: labels `(tl, tm)` with
/// `|s| ≤ l ≤ L`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBasis {
    pub ts: i32,
    pub labels: Vec<(i32, i32)>,
}

impl WeightBasis {
    pub fn new(ts: i32, tl_cut: i32) -> Self {
        let mut labels = Vec::new();
        let mut tl = ts.abs();
        while tl <= tl_cut {
            for tm in (-tl..=tl).step_by(2) {
                labels.push((tl, tm));
            }
            tl += 2;
        }
        Self { ts, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, tl: i32, tm: i32) -> Option<usize> {
        self.labels.iter().position(|&x| x == (tl, tm))
    }

    /// Coefficients of `ð f` in the basis of weight `s + 1` (missing labels dropped).
    pub fn eth(&self, c: &[Complex64], target: &WeightBasis) -> Vec<Complex64> {
        assert_eq!(target.ts, self.ts + 2);
        let s = self.ts as f64 / 2.0;
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        for (k, &(tl, tm)) in self.labels.iter().enumerate() {
            let l = tl as f64 / 2.0;
            if let Some(t) = target.index_of(tl, tm) {
                out[t] += c[k] * ((l - s) * (l + s + 1.0)).max(0.0).sqrt();
            }
        }
        out
    }

    /// Coefficients of `ð̄ f` in the basis of weight `s - 1`.
    pub fn eth_bar(&self, c: &[Complex64], target: &WeightBasis) -> Vec<Complex64> {
        assert_eq!(target.ts, self.ts - 2);
        let s = self.ts as f64 / 2.0;
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        for (k, &(tl, tm)) in self.labels.iter().enumerate() {
            let l = tl as f64 / 2.0;
            if let Some(t) = target.index_of(tl, tm) {
                out[t] -= c[k] * ((l + s) * (l - s + 1.0)).max(0.0).sqrt();
            }
        }
        out
    }

    /// Pointwise values on the grid.
    pub fn synthesize(&self, c: &[Complex64], grid: &SphereGrid) -> Vec<Complex64> {
        let n_phi = grid.phi.len();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        let mut by_l: std::collections::BTreeMap<i32, Vec<(i32, Complex64)>> = Default::default();
        for (k, &(tl, tm)) in self.labels.iter().enumerate() {
            if c[k] != Complex64::new(0.0, 0.0) {
                by_l.entry(tl).or_default().push((tm, c[k]));
            }
        }
        for (tl, terms) in by_l {
            let norm = ((tl as f64 + 1.0) / (4.0 * PI)).sqrt();
            let mats = wigner_on_grid(tl, &grid.theta);
            for (it, d) in mats.iter().enumerate() {
                for &(tm, coef) in &terms {
                    let amp = norm * swsh_sign(self.ts, tm) * WignerD::entry(d, tl, tm, -self.ts);
                    for (jp, &phi) in grid.phi.iter().enumerate() {
                        out[it * n_phi + jp] +=
                            coef * Complex64::from_polar(amp, tm as f64 / 2.0 * phi);
                    }
                }
            }
        }
        out
    }
}

/// Coefficient space of 2-D spinors on the sphere: `Σ⁺` has doubled spin
/// weight `ts`, `Σ⁻` has `ts + 2`. Coefficients are stored `[Σ⁺ | Σ⁻]`.
///
/// Grid values are returned in the frame `(e_θ, e_φ)` representation, in
/// which `u⁺ = ψ⁺` and `u⁻ = −iψ⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorSpace {
    pub plus: WeightBasis,
    pub minus: WeightBasis,
    pub tl_cut: i32,
}

/// Pointwise frame-representation values and covariant derivatives.
#[derive(Debug, Clone)]
pub struct SpinorJet {
    pub value: Vec<[Complex64; 2]>,
    /// `∇_{e_θ}` and `∇_{e_φ}` of the field.
    pub grad: [Vec<[Complex64; 2]>; 2],
}

impl SpinorSpace {
    pub fn new(ts: i32, l_max: usize) -> Self {
        let tl_cut = 2 * l_max as i32 + ts.rem_euclid(2);
        Self { plus: WeightBasis::new(ts, tl_cut), minus: WeightBasis::new(ts + 2, tl_cut), tl_cut }
    }

    pub fn dim(&self) -> usize {
        self.plus.len() + self.minus.len()
    }

    pub fn split<'a>(&self, c: &'a [Complex64]) -> (&'a [Complex64], &'a [Complex64]) {
        c.split_at(self.plus.len())
    }

    /// `μ_l = sqrt((l − s)(l + s + 1))`, the `D` coupling of the `(l, m)` pair.
    pub fn mu(&self, tl: i32) -> f64 {
        let s = self.plus.ts as f64 / 2.0;
        let l = tl as f64 / 2.0;
        ((l - s) * (l + s + 1.0)).max(0.0).sqrt()
    }

    /// `(Σ⁺ index, Σ⁻ index, μ)` for every `(l, m)` present in both chiralities.
    pub fn couplings(&self) -> Vec<(usize, usize, f64)> {
        let offset = self.plus.len();
        self.plus
            .labels
            .iter()
            .enumerate()
            .filter_map(|(a, &(tl, tm))| {
                self.minus.index_of(tl, tm).map(|b| (a, offset + b, self.mu(tl)))
            })
            .collect()
    }

    /// Bochner Laplacian `∇*∇` eigenvalue of a basis element:
    /// `l(l+1) − s²` for spin weight `s`.
    pub fn rough_laplacian(&self, ts: i32, tl: i32) -> f64 {
        let l = tl as f64 / 2.0;
        let s = ts as f64 / 2.0;
        l * (l + 1.0) - s * s
    }

    /// Values and frame derivatives on the grid.
    pub fn jet(&self, c: &[Complex64], grid: &SphereGrid) -> SpinorJet {
        let (cp, cm) = self.split(c);
        let i = Complex64::i();
        let comp = |basis: &WeightBasis, coef: &[Complex64], phase: Complex64| {
            let up = WeightBasis::new(basis.ts + 2, self.tl_cut);
            let dn = WeightBasis::new(basis.ts - 2, self.tl_cut);
            let v = basis.synthesize(coef, grid);
            let e = up.synthesize(&basis.eth(coef, &up), grid);
            let eb = dn.synthesize(&basis.eth_bar(coef, &dn), grid);
            let dth: Vec<Complex64> = e.iter().zip(&eb).map(|(a, b)| -(a + b) * 0.5 * phase).collect();
            let dph: Vec<Complex64> = e.iter().zip(&eb).map(|(a, b)| i * (a - b) * 0.5 * phase).collect();
            (v.into_iter().map(|x| x * phase).collect::<Vec<_>>(), dth, dph)
        };
        let (vp, tp, pp) = comp(&self.plus, cp, Complex64::new(1.0, 0.0));
        let (vm, tm, pm) = comp(&self.minus, cm, -i);
        let zip = |a: Vec<Complex64>, b: Vec<Complex64>| a.into_iter().zip(b).map(|(x, y)| [x, y]).collect();
        SpinorJet { value: zip(vp, vm), grad: [zip(tp, tm), zip(pp, pm)] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((p - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn wigner_d_known_values() {
        // j = 1/2: d_{1/2,1/2} = cos(β/2), d_{1/2,-1/2} = -sin(β/2)
        let w = WignerD::new(1);
        let b = 0.7;
        let d = w.matrix(b);
        assert!((WignerD::entry(&d, 1, 1, 1) - (b / 2.0).cos()).abs() < 1e-14);
        assert!((WignerD::entry(&d, 1, 1, -1) + (b / 2.0).sin()).abs() < 1e-14);
        // j = 1: d_{00} = cos β
        let d1 = WignerD::new(2).matrix(b);
        assert!((WignerD::entry(&d1, 2, 0, 0) - b.cos()).abs() < 1e-14);
        // unitarity at large j
        let big = WignerD::new(33).matrix(1.1);
        let id = &big * big.transpose();
        assert!((id - DMatrix::identity(34, 34)).norm() < 1e-12);
    }

    #[test]
    fn y00_is_constant() {
        let v = swsh(0, 0, 0, 0.4, 1.3);
        assert!((v.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);
    }

    fn eth_fd(ts: i32, tl: i32, tm: i32, theta: f64, phi: f64) -> Complex64 {
        let h = 1e-5;
        let s = ts as f64 / 2.0;
        let dth = (swsh(ts, tl, tm, theta + h, phi) - swsh(ts, tl, tm, theta - h, phi)) / (2.0 * h);
        let dph = (swsh(ts, tl, tm, theta, phi + h) - swsh(ts, tl, tm, theta, phi - h)) / (2.0 * h);
        let f = swsh(ts, tl, tm, theta, phi);
        -(dth + Complex64::i() * dph / theta.sin() - f * s / theta.tan())
    }

    fn eth_bar_fd(ts: i32, tl: i32, tm: i32, theta: f64, phi: f64) -> Complex64 {
        let h = 1e-5;
        let s = ts as f64 / 2.0;
        let dth = (swsh(ts, tl, tm, theta + h, phi) - swsh(ts, tl, tm, theta - h, phi)) / (2.0 * h);
        let dph = (swsh(ts, tl, tm, theta, phi + h) - swsh(ts, tl, tm, theta, phi - h)) / (2.0 * h);
        let f = swsh(ts, tl, tm, theta, phi);
        -(dth - Complex64::i() * dph / theta.sin() + f * s / theta.tan())
    }

    #[test]
    fn ladder_relations_match_finite_differences() {
        let (theta, phi) = (1.1, 0.4);
        for &(ts, tl, tm) in &[(0, 2, 0), (0, 4, 2), (-1, 1, 1), (-1, 3, -1), (1, 3, 3), (2, 4, -2), (-2, 6, 2), (3, 5, 1)] {
            let s = ts as f64 / 2.0;
            let l = tl as f64 / 2.0;
            let up = ((l - s) * (l + s + 1.0)).sqrt();
            let dn = ((l + s) * (l - s + 1.0)).sqrt();
            let want_up = if up > 0.0 { swsh(ts + 2, tl, tm, theta, phi) * up } else { Complex64::new(0.0, 0.0) };
            let want_dn = if dn > 0.0 { -swsh(ts - 2, tl, tm, theta, phi) * dn } else { Complex64::new(0.0, 0.0) };
            let got_up = eth_fd(ts, tl, tm, theta, phi);
            let got_dn = eth_bar_fd(ts, tl, tm, theta, phi);
            assert!((got_up - want_up).norm() < 1e-8, "eth ({ts},{tl},{tm}): {got_up} vs {want_up}");
            assert!((got_dn - want_dn).norm() < 1e-8, "eth_bar ({ts},{tl},{tm}): {got_dn} vs {want_dn}");
        }
    }

    #[test]
    fn basis_is_orthonormal_under_quadrature() {
        let grid = SphereGrid::new(20, 40);
        let w = grid.weights();
        for ts in [-1, 0, 1, 2] {
            let basis = WeightBasis::new(ts, 9);
            let vals: Vec<Vec<Complex64>> = (0..basis.len())
                .map(|k| {
                    let mut c = vec![Complex64::new(0.0, 0.0); basis.len()];
                    c[k] = Complex64::from(1.0);
                    basis.synthesize(&c, &grid)
                })
                .collect();
            for a in 0..basis.len() {
                for b in 0..basis.len() {
                    let ip: Complex64 =
                        vals[a].iter().zip(&vals[b]).zip(&w).map(|((x, y), w)| x.conj() * y * *w).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - want).norm() < 1e-12, "ts={ts} ({a},{b}) {ip}");
                }
            }
        }
    }

    #[test]
    fn basis_count_closed_form() {
        // Σ_{l=|s|}^{L} (2l+1) = (L+1)² - s²
        for (ts, tl_cut) in [(0, 32), (2, 32), (-1, 33), (1, 33), (4, 32)] {
            let b = WeightBasis::new(ts, tl_cut);
            let big_l = tl_cut as f64 / 2.0;
            let s = ts as f64 / 2.0;
            let want = (big_l + 1.0).powi(2) - s * s;
            assert_eq!(b.len() as f64, want);
        }
    }
}
