use std::collections::VecDeque;

use num_complex::Complex64;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|r| a.row(r).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // start each component from a minimum-degree node
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).map(|(c, _)| c).filter(|&c| !visited[c]).collect();
            nbrs.sort_by_key(|&c| (degree[c], c));
            for c in nbrs {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// `P A Pᵀ = L D Lᴴ` for a Hermitian matrix with small bandwidth after
/// reordering. No pivoting: the shifted operators it is used on are either
/// definite or shifted away from the spectrum.
#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    band: usize,
    perm: Vec<usize>,
    lower: Vec<Complex64>,
    diag: Vec<f64>,
}

impl BandedLdl {
    pub fn bandwidth_under(a: &CsrMatrix, perm: &[usize]) -> usize {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut b = 0;
        for r in 0..a.dim() {
            for (c, _) in a.row(r) {
                b = b.max(inv[r].abs_diff(inv[c]));
            }
        }
        b
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = rcm_ordering(a);
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let band = Self::bandwidth_under(a, &perm);
        let w = band + 1;
        let mut lower = vec![Complex64::new(0.0, 0.0); n * w];
        let mut diag = vec![0.0; n];
        // scatter the lower triangle of the permuted matrix
        for r in 0..n {
            for (c, v) in a.row(r) {
                let (i, j) = (inv[r], inv[c]);
                if j < i {
                    lower[i * w + (j + band - i)] = v;
                } else if j == i {
                    diag[i] = v.re;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..i {
                let jlo = lo.max(j.saturating_sub(band));
                let mut s = lower[i * w + (j + band - i)];
                for k in jlo..j {
                    s -= lower[i * w + (k + band - i)]
                        * diag[k]
                        * lower[j * w + (k + band - j)].conj();
                }
                lower[i * w + (j + band - i)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in lo..i {
                d -= lower[i * w + (k + band - i)].norm_sqr() * diag[k];
            }
            if d.abs() < 1e-14 * scale {
                return Err(Error::Assembly(format!(
                    "near-singular pivot {d:.3e} at row {i}; shift lies on the spectrum"
                )));
            }
            diag[i] = d;
        }
        Ok(Self { n, band, perm, lower, diag })
    }

    pub fn bandwidth(&self) -> usize {
        self.band
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let w = self.band + 1;
        let mut y: Vec<Complex64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(self.band);
            let mut s = y[i];
            for k in lo..i {
                s -= self.lower[i * w + (k + self.band - i)] * y[k];
            }
            y[i] = s;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= *d;
        }
        for i in (0..n).rev() {
            let hi = (i + self.band).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.lower[k * w + (i + self.band - k)].conj() * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_laplacian(n: usize, shift: f64) -> CsrMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            trip.push((i, i, Complex64::from(2.0 - shift)));
            trip.push((i, j, Complex64::from_polar(-1.0, 0.3)));
            trip.push((j, i, Complex64::from_polar(-1.0, -0.3)));
        }
        CsrMatrix::from_triplets(n, trip)
    }

    #[test]
    fn rcm_shrinks_periodic_band() {
        let a = ring_laplacian(40, 0.0);
        let natural: Vec<usize> = (0..40).collect();
        assert_eq!(BandedLdl::bandwidth_under(&a, &natural), 39);
        assert!(BandedLdl::bandwidth_under(&a, &rcm_ordering(&a)) <= 2);
    }

    #[test]
    fn ldl_solves_indefinite_shifted_system() {
        let a = ring_laplacian(25, 1.3);
        let f = BandedLdl::factor(&a).unwrap();
        let b: Vec<_> = (0..25).map(|i| Complex64::new((i as f64).sin(), 0.5)).collect();
        let x = f.solve(&b);
        let r = a.apply(&x);
        let err = r.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
