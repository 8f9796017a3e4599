//! Fixed complex representations of the Clifford algebras Cl(2) and Cl(3).
//!
//! In two dimensions the spinor module is ℂ² = Σ⁺ ⊕ Σ⁻ with
//! `e₁ ↦ [[0, i], [i, 0]]` and `e₂ ↦ [[0, 1], [-1, 0]]`, so that the chirality
//! operator `ω = i e₁e₂` is `diag(1, -1)`. In three dimensions `e_k ↦ i σ_k`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

pub type Spinor = Vector2<Complex64>;
pub type CliffMat = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Surface generators `e₁`, `e₂`.
pub fn e2(k: usize) -> CliffMat {
    match k {
        0 => CliffMat::new(ZERO, I, I, ZERO),
        1 => CliffMat::new(ZERO, ONE, -ONE, ZERO),
        _ => panic!("surface Clifford index {k} out of range"),
    }
}

/// Three-dimensional generators `e_k = i σ_k`.
pub fn e3(k: usize) -> CliffMat {
    match k {
        0 => CliffMat::new(ZERO, I, I, ZERO),
        1 => CliffMat::new(ZERO, ONE, -ONE, ZERO),
        2 => CliffMat::new(I, ZERO, ZERO, -I),
        _ => panic!("Clifford index {k} out of range"),
    }
}

/// `e₁e₂` in the surface representation, `diag(-i, i)`.
pub fn vol2() -> CliffMat {
    e2(0) * e2(1)
}

/// Clifford multiplication by a tangent vector given by frame components.
pub fn mul2(x: [f64; 2], psi: &Spinor) -> Spinor {
    (e2(0) * Complex64::from(x[0]) + e2(1) * Complex64::from(x[1])) * psi
}

pub fn mul3(x: [f64; 3], psi: &Spinor) -> Spinor {
    let m = e3(0) * Complex64::from(x[0])
        + e3(1) * Complex64::from(x[1])
        + e3(2) * Complex64::from(x[2]);
    m * psi
}

/// Matrix of Clifford multiplication by `Σ x_k e_k` (surface).
pub fn vec2_mat(x: [f64; 2]) -> CliffMat {
    e2(0) * Complex64::from(x[0]) + e2(1) * Complex64::from(x[1])
}

pub fn vec3_mat(x: [f64; 3]) -> CliffMat {
    e3(0) * Complex64::from(x[0]) + e3(1) * Complex64::from(x[1]) + e3(2) * Complex64::from(x[2])
}

/// `φ̄ = i e₁·e₂·φ`, which is `(φ⁺, -φ⁻)` in this representation.
pub fn bar(psi: &Spinor) -> Spinor {
    Spinor::new(psi[0], -psi[1])
}

/// Real part of the Hermitian product `(a, b) = Σ a_k conj(b_k)`.
pub fn re_dot(a: &Spinor, b: &Spinor) -> f64 {
    (a[0] * b[0].conj() + a[1] * b[1].conj()).re
}

pub fn norm_sq(a: &Spinor) -> f64 {
    a[0].norm_sqr() + a[1].norm_sqr()
}

/// Action of a surface 2-form `Ω₁₂ e₁∧e₂`.
pub fn omega2(omega12: f64, psi: &Spinor) -> Spinor {
    vol2() * psi * Complex64::from(omega12)
}

/// Action of a 3-form-free 2-form with components `(Ω₁₂, Ω₁₃, Ω₂₃)`.
pub fn omega3(om: [f64; 3], psi: &Spinor) -> Spinor {
    let m = e3(0) * e3(1) * Complex64::from(om[0])
        + e3(0) * e3(2) * Complex64::from(om[1])
        + e3(1) * e3(2) * Complex64::from(om[2]);
    m * psi
}

/// `c_n = 2·[n/2]^{1/2}`.
pub fn c_n(n: usize) -> f64 {
    2.0 * ((n / 2) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Spinor {
        Spinor::new(Complex64::new(0.3, -1.2), Complex64::new(0.7, 0.4))
    }

    fn close(a: &Spinor, b: &Spinor) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn clifford_relations_2d() {
        let psi = sample();
        for i in 0..2 {
            for j in 0..2 {
                let anti = (e2(i) * e2(j) + e2(j) * e2(i)) * psi;
                let expect = if i == j { -psi * Complex64::from(2.0) } else { Spinor::zeros() };
                assert!(close(&anti, &expect));
            }
        }
        assert!(close(&(e2(0) * (e2(0) * psi)), &(-psi)));
    }

    #[test]
    fn clifford_relations_3d() {
        let psi = sample();
        for i in 0..3 {
            for j in 0..3 {
                let anti = (e3(i) * e3(j) + e3(j) * e3(i)) * psi;
                let expect = if i == j { -psi * Complex64::from(2.0) } else { Spinor::zeros() };
                assert!(close(&anti, &expect));
            }
        }
    }

    #[test]
    fn chirality_is_diagonal() {
        let w = vol2() * I;
        assert!((w - CliffMat::new(ONE, ZERO, ZERO, -ONE)).norm() < 1e-15);
        let plus = Spinor::new(Complex64::new(0.2, 0.9), ZERO);
        let minus = Spinor::new(ZERO, Complex64::new(-0.4, 0.1));
        assert!(close(&(w * plus), &plus));
        assert!(close(&(w * minus), &(-minus)));
    }

    #[test]
    fn bar_properties() {
        let psi = sample();
        assert!(close(&bar(&bar(&psi)), &psi));
        assert!(close(&bar(&psi), &(vol2() * psi * I)));
        let expect = psi[0].norm_sqr() - psi[1].norm_sqr();
        assert!((re_dot(&psi, &bar(&psi)) - expect).abs() < 1e-14);
    }

    #[test]
    fn clifford_multiplication_is_skew() {
        let psi = sample();
        for x in [[1.0, 0.0], [0.3, -0.8], [2.0, 5.0]] {
            assert!(re_dot(&mul2(x, &psi), &psi).abs() < 1e-14);
        }
        assert!(re_dot(&mul3([0.1, 0.5, -0.7], &psi), &psi).abs() < 1e-14);
    }

    #[test]
    fn omega_expansion() {
        let psi = sample();
        let om = 0.37;
        let expect = Spinor::new(-I * om * psi[0], I * om * psi[1]);
        assert!(close(&omega2(om, &psi), &expect));
        assert_eq!(c_n(2), 2.0);
        assert_eq!(c_n(3), 2.0);
    }
}
