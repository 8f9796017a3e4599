//! Energy-Momentum tensor, its skew companion, and the frame decomposition
//! of `∇ψ`.
//!
//! All tensors live in the orthonormal frame. With `u = |ψ|²`:
//!
//! ```text
//! T_ij = ½ Re(e_i·∇_jψ + e_j·∇_iψ, ψ) / u      Q_ij = ½ Re(e_i·∇_jψ − e_j·∇_iψ, ψ) / u
//! Y_i  = Re(Dψ, e_i·ψ) / u                       f = ½ ln u
//! ∇_jψ = δ_j ψ + Σ_i α_ij e_i·ψ + β_j e₁·e₂·ψ     (surfaces)
//! ```

use std::io::Write;

use num_complex::Complex64;

use crate::clifford::{self, CliffMat, Spinor};
use crate::dirac::assemble_d_sphere;
use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::spinc::{SpincStructure, SpinorField};

/// Relative threshold below which `|ψ|²` counts as a zero.
pub const EPS_ZERO: f64 = 1e-8;

/// Pointwise values and covariant derivatives of a spinor field.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub dim: usize,
    pub value: Vec<Spinor>,
    /// `∇_{e_μ}ψ`; unused slots are zero.
    pub grad: Vec<[Spinor; 3]>,
    pub dpsi: Vec<Spinor>,
    /// `∂_μ u` in the frame.
    pub grad_u: Vec<[f64; 3]>,
    /// `Δu` with `Δ = −div grad`.
    pub lap_u: Vec<f64>,
    /// `div ξ` for `ξ_i = Re(Dψ, e_i·ψ)`.
    pub div_xi: Vec<f64>,
}

fn gen(dim: usize, k: usize) -> CliffMat {
    if dim == 2 {
        clifford::e2(k)
    } else {
        clifford::e3(k)
    }
}

fn zero_spinor() -> Spinor {
    Spinor::zeros()
}

/// Neighbor index `x + k e_μ` with periodic wrap.
fn step(d: &Domain, x: usize, ax: usize, k: i64) -> usize {
    let mut c = d.lattice_coords(x);
    c[ax] += k;
    d.lattice_index(c)
}

/// Fourth-order centered covariant difference along one lattice axis:
/// `[8(ψ₊₁ − ψ₋₁) − (ψ₊₂ − ψ₋₂)] / 12h`, each neighbor parallel-transported
/// to `x` with the spinor links.
fn lattice_derivative(d: &Domain, s: &SpincStructure, psi: &SpinorField, ax: usize) -> Vec<Spinor> {
    let h = d.h[ax];
    let links = &s.links[ax];
    (0..d.n_points())
        .map(|x| {
            let (xp, xm) = (step(d, x, ax, 1), step(d, x, ax, -1));
            let (xp2, xm2) = (step(d, x, ax, 2), step(d, x, ax, -2));
            let up = links[x];
            let um = links[xm].conj();
            let up2 = up * links[xp];
            let um2 = um * links[xm2].conj();
            let first = psi.values[xp] * up - psi.values[xm] * um;
            let second = psi.values[xp2] * up2 - psi.values[xm2] * um2;
            (first * Complex64::from(8.0) - second) / Complex64::from(12.0 * h)
        })
        .collect()
}

fn lattice_scalar_grad(d: &Domain, u: &[f64], ax: usize) -> Vec<f64> {
    let h = d.h[ax];
    (0..d.n_points())
        .map(|x| {
            let at = |k: i64| u[step(d, x, ax, k)];
            (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * h)
        })
        .collect()
}

/// Fourth-order `Δ = −div grad`.
fn lattice_scalar_laplacian(d: &Domain, u: &[f64]) -> Vec<f64> {
    (0..d.n_points())
        .map(|x| {
            let mut acc = 0.0;
            for ax in 0..d.dim() {
                let at = |k: i64| u[step(d, x, ax, k)];
                acc -= (-at(2) + 16.0 * at(1) - 30.0 * u[x] + 16.0 * at(-1) - at(-2)) / (12.0 * d.h[ax] * d.h[ax]);
            }
            acc
        })
        .collect()
}

fn lattice_jet(d: &Domain, s: &SpincStructure, psi: &SpinorField) -> FieldJet {
    let dim = d.dim();
    let np = d.n_points();
    let derivs: Vec<Vec<Spinor>> = (0..dim).map(|ax| lattice_derivative(d, s, psi, ax)).collect();
    let mut grad = vec![[zero_spinor(); 3]; np];
    let mut dpsi = vec![zero_spinor(); np];
    for x in 0..np {
        for ax in 0..dim {
            grad[x][ax] = derivs[ax][x];
            dpsi[x] += gen(dim, ax) * derivs[ax][x];
        }
    }
    let u = psi.density();
    let mut grad_u = vec![[0.0; 3]; np];
    for ax in 0..dim {
        for (x, g) in lattice_scalar_grad(d, &u, ax).into_iter().enumerate() {
            grad_u[x][ax] = g;
        }
    }
    let lap_u = lattice_scalar_laplacian(d, &u);
    let mut div_xi = vec![0.0; np];
    for ax in 0..dim {
        let e = gen(dim, ax);
        let xi: Vec<f64> = (0..np).map(|x| clifford::re_dot(&dpsi[x], &(e * psi.values[x]))).collect();
        for (x, g) in lattice_scalar_grad(d, &xi, ax).into_iter().enumerate() {
            div_xi[x] += g;
        }
    }
    FieldJet { dim, value: psi.values.clone(), grad, dpsi, grad_u, lap_u, div_xi }
}

fn to_spinors(v: &[[Complex64; 2]]) -> Vec<Spinor> {
    v.iter().map(|a| Spinor::new(a[0], a[1])).collect()
}

fn sphere_jet(d: &Domain, s: &SpincStructure, psi: &SpinorField) -> Result<FieldJet> {
    let c = psi
        .coeffs
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("sphere field without coefficients".into()))?;
    let grid = d.sphere.as_ref().expect("sphere grid");
    let dop = assemble_d_sphere(d, s)?;
    let space = dop.space.clone().expect("sphere space");
    let jet = space.jet(c, grid);
    let dc = dop.apply_vec(c);
    let djet = space.jet(&dc, grid);
    // ∇*∇ is diagonal in the harmonic basis
    let (cp, cm) = space.split(c);
    let mut rough: Vec<Complex64> = Vec::with_capacity(c.len());
    for (k, &(tl, _)) in space.plus.labels.iter().enumerate() {
        rough.push(cp[k] * space.rough_laplacian(space.plus.ts, tl));
    }
    for (k, &(tl, _)) in space.minus.labels.iter().enumerate() {
        rough.push(cm[k] * space.rough_laplacian(space.minus.ts, tl));
    }
    let rough_vals = to_spinors(&space.jet(&rough, grid).value);
    let value = to_spinors(&jet.value);
    let g0 = to_spinors(&jet.grad[0]);
    let g1 = to_spinors(&jet.grad[1]);
    let dpsi = to_spinors(&djet.value);
    let dg = [to_spinors(&djet.grad[0]), to_spinors(&djet.grad[1])];
    let np = value.len();
    let mut grad = vec![[zero_spinor(); 3]; np];
    let mut grad_u = vec![[0.0; 3]; np];
    let mut lap_u = vec![0.0; np];
    let mut div_xi = vec![0.0; np];
    for x in 0..np {
        let v = &value[x];
        grad[x][0] = g0[x];
        grad[x][1] = g1[x];
        grad_u[x][0] = 2.0 * clifford::re_dot(&g0[x], v);
        grad_u[x][1] = 2.0 * clifford::re_dot(&g1[x], v);
        let grad_sq = clifford::norm_sq(&g0[x]) + clifford::norm_sq(&g1[x]);
        lap_u[x] = 2.0 * clifford::re_dot(&rough_vals[x], v) - 2.0 * grad_sq;
        for i in 0..2 {
            let e = clifford::e2(i);
            div_xi[x] += clifford::re_dot(&dg[i][x], &(e * v)) + clifford::re_dot(&dpsi[x], &(e * grad[x][i]));
        }
    }
    Ok(FieldJet { dim: 2, value, grad, dpsi, grad_u, lap_u, div_xi })
}

/// Covariant derivatives by centered lattice differences or exact ladder
/// derivatives.
pub fn field_jet(d: &Domain, s: &SpincStructure, psi: &SpinorField) -> Result<FieldJet> {
    match d.kind {
        DomainKind::Torus2 | DomainKind::Torus3 => Ok(lattice_jet(d, s, psi)),
        DomainKind::SphereLadder => sphere_jet(d, s, psi),
        DomainKind::Patch2 => Err(Error::Unsupported("spinor derivatives on chart patches".into())),
    }
}

#[derive(Debug, Clone)]
pub struct EmtData {
    pub dim: usize,
    pub density: Vec<f64>,
    pub f: Vec<f64>,
    pub y: Vec<[f64; 3]>,
    pub t: Vec<[[f64; 3]; 3]>,
    pub q: Vec<[[f64; 3]; 3]>,
    pub delta: Vec<[f64; 3]>,
    /// `α_ij`, the `e_i·ψ` coefficient of `∇_jψ` (on 3-manifolds this is `ℓ`).
    pub alpha: Vec<[[f64; 3]; 3]>,
    /// `β_j`; zero on 3-manifolds.
    pub beta: Vec<[f64; 3]>,
    /// `∇f = du / 2u`.
    pub grad_f: Vec<[f64; 3]>,
    /// `Δf = Δu/2u + |du|²/2u²`.
    pub lap_f: Vec<f64>,
    /// `|Dψ|² / u`.
    pub dpsi_sq: Vec<f64>,
    /// `(i/2 Ω·ψ, ψ) / u`.
    pub zeeman: Vec<f64>,
    /// `div ξ / u`.
    pub div_xi: Vec<f64>,
    /// `‖∇_jψ − (δ_jψ + α_ij e_iψ + β_j e₁e₂ψ)‖ / |ψ|`, maximized over `j`.
    pub reconstruction: Vec<f64>,
    /// `true` where `u ≤ ε_zero · max u`.
    pub mask: Vec<bool>,
}

impl EmtData {
    pub fn q12(&self, x: usize) -> f64 {
        self.q[x][0][1]
    }

    pub fn t_sq(&self, x: usize) -> f64 {
        self.t[x].iter().flatten().map(|v| v * v).sum()
    }

    pub fn q_sq(&self, x: usize) -> f64 {
        self.q[x].iter().flatten().map(|v| v * v).sum()
    }

    pub fn tr_t(&self, x: usize) -> f64 {
        (0..self.dim).map(|i| self.t[x][i][i]).sum()
    }

    pub fn y_sq(&self, x: usize) -> f64 {
        self.y[x].iter().map(|v| v * v).sum()
    }

    /// `Y(f) = g(Y, ∇f)`.
    pub fn y_f(&self, x: usize) -> f64 {
        (0..3).map(|i| self.y[x][i] * self.grad_f[x][i]).sum()
    }

    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    pub fn n_points(&self) -> usize {
        self.density.len()
    }
}

/// Fills every EMT field; `dpsi` defaults to `Σ e_i·∇_iψ` from the jet.
pub fn compute_emt(d: &Domain, s: &SpincStructure, psi: &SpinorField, dpsi: Option<&SpinorField>) -> Result<EmtData> {
    let jet = field_jet(d, s, psi)?;
    emt_from_jet(d, s, &jet, dpsi)
}

pub fn emt_from_jet(d: &Domain, s: &SpincStructure, jet: &FieldJet, dpsi: Option<&SpinorField>) -> Result<EmtData> {
    let dim = jet.dim;
    let np = jet.value.len();
    let density: Vec<f64> = jet.value.iter().map(clifford::norm_sq).collect();
    let umax = density.iter().copied().fold(0.0, f64::max);
    if umax.is_nan() || umax <= 0.0 {
        return Err(Error::Degenerate("spinor field vanishes identically".into()));
    }
    let dvals: &[Spinor] = match dpsi {
        Some(f) => &f.values,
        None => &jet.dpsi,
    };
    let gens: Vec<CliffMat> = (0..dim).map(|k| gen(dim, k)).collect();
    let vol = clifford::vol2();
    let i_half = Complex64::new(0.0, 0.5);
    let mut e = EmtData {
        dim,
        density: density.clone(),
        f: vec![0.0; np],
        y: vec![[0.0; 3]; np],
        t: vec![[[0.0; 3]; 3]; np],
        q: vec![[[0.0; 3]; 3]; np],
        delta: vec![[0.0; 3]; np],
        alpha: vec![[[0.0; 3]; 3]; np],
        beta: vec![[0.0; 3]; np],
        grad_f: vec![[0.0; 3]; np],
        lap_f: vec![0.0; np],
        dpsi_sq: vec![0.0; np],
        zeeman: vec![0.0; np],
        div_xi: vec![0.0; np],
        reconstruction: vec![0.0; np],
        mask: density.iter().map(|&u| u <= EPS_ZERO * umax).collect(),
    };
    let om_psi = crate::spinc::omega_clifford(s, &SpinorField::new(jet.value.clone()));
    for x in 0..np {
        let u = density[x];
        if e.mask[x] {
            continue;
        }
        let v = &jet.value[x];
        e.f[x] = 0.5 * u.ln();
        for i in 0..dim {
            e.y[x][i] = clifford::re_dot(&dvals[x], &(gens[i] * v)) / u;
            e.grad_f[x][i] = jet.grad_u[x][i] / (2.0 * u);
        }
        let ec: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| clifford::re_dot(&(gens[i] * jet.grad[x][j]), v) / u).collect())
            .collect();
        for i in 0..dim {
            for j in 0..dim {
                e.t[x][i][j] = 0.5 * (ec[i][j] + ec[j][i]);
                e.q[x][i][j] = 0.5 * (ec[i][j] - ec[j][i]);
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            let g = &jet.grad[x][j];
            e.delta[x][j] = clifford::re_dot(g, v) / u;
            let mut rec = v * Complex64::from(e.delta[x][j]);
            for i in 0..dim {
                e.alpha[x][i][j] = clifford::re_dot(g, &(gens[i] * v)) / u;
                rec += gens[i] * v * Complex64::from(e.alpha[x][i][j]);
            }
            if dim == 2 {
                e.beta[x][j] = clifford::re_dot(g, &(vol * v)) / u;
                rec += vol * v * Complex64::from(e.beta[x][j]);
            }
            worst = worst.max((g - rec).norm() / u.sqrt());
        }
        e.reconstruction[x] = worst;
        let gu2: f64 = jet.grad_u[x].iter().map(|g| g * g).sum();
        e.lap_f[x] = jet.lap_u[x] / (2.0 * u) + gu2 / (2.0 * u * u);
        e.dpsi_sq[x] = clifford::norm_sq(&dvals[x]) / u;
        e.zeeman[x] = clifford::re_dot(&(om_psi.values[x] * i_half), v) / u;
        e.div_xi[x] = jet.div_xi[x] / u;
    }
    let _ = d;
    Ok(e)
}

/// `det(T + Q)` per point, with the pointwise defect of
/// `2 det(T+Q) = (tr T)² + |Q|² − |T|²`.
pub fn det_tq(e: &EmtData) -> Result<(Vec<f64>, f64)> {
    if e.dim != 2 {
        return Err(Error::DomainKind("det(T+Q) is defined on surfaces".into()));
    }
    let mut worst: f64 = 0.0;
    let det: Vec<f64> = (0..e.n_points())
        .map(|x| {
            let m = |i: usize, j: usize| e.t[x][i][j] + e.q[x][i][j];
            let dt = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
            let tr = e.tr_t(x);
            worst = worst.max((2.0 * dt - (tr * tr + e.q_sq(x) - e.t_sq(x))).abs());
            dt
        })
        .collect();
    Ok((det, worst))
}

/// Residuals of `λ² + div ξ/u = (tr T)² + |Y|² + 2|Q|²` and of the plumbing
/// identity `div ξ/u = div Y + 2Y(f)`, as weighted RMS over unmasked points.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceCheck {
    pub residual_l2: f64,
    pub residual_linf: f64,
    pub plumbing_l2: f64,
    /// RMS of `|Dψ|²/u − ((tr T)² + |Y|² + 2|Q|²)`.
    pub dpsi_norm_l2: f64,
}

pub fn divergence_identity_check(d: &Domain, s: &SpincStructure, psi: &SpinorField, lambda_sq: f64) -> Result<DivergenceCheck> {
    let jet = field_jet(d, s, psi)?;
    let e = emt_from_jet(d, s, &jet, None)?;
    // on 3-manifolds {ψ, e_i·ψ} already spans, so Q does not enter
    let q_weight = if e.dim == 2 { 2.0 } else { 0.0 };
    let norm_decomp = |x: usize| e.tr_t(x).powi(2) + e.y_sq(x) + q_weight * e.q_sq(x);
    let r: Vec<f64> = (0..e.n_points()).map(|x| lambda_sq + e.div_xi[x] - norm_decomp(x)).collect();
    let nd: Vec<f64> = (0..e.n_points()).map(|x| e.dpsi_sq[x] - norm_decomp(x)).collect();
    let div_y = divergence_y(d, &e)?;
    let plumb: Vec<f64> = (0..e.n_points()).map(|x| e.div_xi[x] - div_y[x] - 2.0 * e.y_f(x)).collect();
    Ok(DivergenceCheck {
        residual_l2: masked_rms(d, &e, &r),
        residual_linf: masked_linf(&e, &r),
        plumbing_l2: masked_rms(d, &e, &plumb),
        dpsi_norm_l2: masked_rms(d, &e, &nd),
    })
}

/// `div Y`: centered differences of the field on lattices, quotient rule of
/// the exact `div ξ` on the sphere.
fn divergence_y(d: &Domain, e: &EmtData) -> Result<Vec<f64>> {
    match d.kind {
        DomainKind::Torus2 | DomainKind::Torus3 => {
            let mut out = vec![0.0; e.n_points()];
            for ax in 0..d.dim() {
                let comp: Vec<f64> = e.y.iter().map(|y| y[ax]).collect();
                for (x, g) in lattice_scalar_grad(d, &comp, ax).into_iter().enumerate() {
                    out[x] += g;
                }
            }
            Ok(out)
        }
        _ => Ok((0..e.n_points())
            .map(|x| e.div_xi[x] - (0..3).map(|i| e.y[x][i] * 2.0 * e.grad_f[x][i]).sum::<f64>())
            .collect()),
    }
}

/// Weighted RMS over unmasked points, `sqrt(Σ w r² / Σ w)`.
pub fn masked_rms(d: &Domain, e: &EmtData, r: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for x in 0..r.len() {
        if !e.mask[x] {
            num += d.weights[x] * r[x] * r[x];
            den += d.weights[x];
        }
    }
    (num / den).sqrt()
}

pub fn masked_linf(e: &EmtData, r: &[f64]) -> f64 {
    r.iter().zip(&e.mask).filter(|(_, &m)| !m).map(|(v, _)| v.abs()).fold(0.0, f64::max)
}

/// CSV with columns `index,x,y[,z],f,Y1,Y2[,Y3],T11,T12,…,Q12`.
pub fn emt_csv(d: &Domain, e: &EmtData) -> String {
    let dim = e.dim;
    let axes = ["x", "y", "z"];
    let mut header = vec!["index".to_string()];
    header.extend(axes[..dim].iter().map(|s| s.to_string()));
    header.push("f".into());
    header.extend((1..=dim).map(|i| format!("Y{i}")));
    for i in 0..dim {
        for j in i..dim {
            header.push(format!("T{}{}", i + 1, j + 1));
        }
    }
    header.push("Q12".into());
    let mut out = header.join(",");
    out.push('\n');
    for x in 0..e.n_points() {
        let mut row = vec![x.to_string()];
        row.extend(d.coords[x][..dim].iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", e.f[x]));
        row.extend(e.y[x][..dim].iter().map(|v| format!("{v:.16e}")));
        for i in 0..dim {
            for j in i..dim {
                row.push(format!("{:.16e}", e.t[x][i][j]));
            }
        }
        row.push(format!("{:.16e}", e.q12(x)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Binary dump: magic `SPEMT001`, then `u64` rows and columns (little
/// endian), then the CSV columns except the index as `f64` LE, row-major.
pub fn write_emt_binary(w: &mut impl Write, d: &Domain, e: &EmtData) -> Result<()> {
    let dim = e.dim;
    let ncols = dim + 1 + dim + dim * (dim + 1) / 2 + 1;
    w.write_all(b"SPEMT001")?;
    w.write_all(&(e.n_points() as u64).to_le_bytes())?;
    w.write_all(&(ncols as u64).to_le_bytes())?;
    for x in 0..e.n_points() {
        let mut row: Vec<f64> = d.coords[x][..dim].to_vec();
        row.push(e.f[x]);
        row.extend_from_slice(&e.y[x][..dim]);
        for i in 0..dim {
            for j in i..dim {
                row.push(e.t[x][i][j]);
            }
        }
        row.push(e.q12(x));
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a dump written by [`write_emt_binary`]: `(rows, cols, data)`.
pub fn read_emt_binary(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    if bytes.len() < 24 || &bytes[..8] != b"SPEMT001" {
        return Err(Error::Parse("not an EMT dump".into()));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let body = &bytes[24..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Parse("EMT dump has the wrong length".into()));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((rows, cols, data))
}
