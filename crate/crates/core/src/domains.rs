//! Discretized model spaces: flat tori, the round sphere, and chart patches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::SphereGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Torus2,
    SphereLadder,
    Patch2,
    Torus3,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Torus3 => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Torus2 => "torus2",
            DomainKind::SphereLadder => "sphere_ladder",
            DomainKind::Patch2 => "patch2",
            DomainKind::Torus3 => "torus3",
        }
    }
}

/// Metric coefficients `(E, F, G)` of a 2-D chart together with their first
/// and second coordinate derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricJet {
    pub g: [f64; 3],
    pub du: [f64; 3],
    pub dv: [f64; 3],
    pub duu: [f64; 3],
    pub duv: [f64; 3],
    pub dvv: [f64; 3],
}

impl MetricJet {
    pub fn det(&self) -> f64 {
        self.g[0] * self.g[2] - self.g[1] * self.g[1]
    }

    /// Gaussian curvature by the Brioschi formula.
    pub fn brioschi(&self) -> f64 {
        let [e, f, g] = self.g;
        let (eu, fu, gu) = (self.du[0], self.du[1], self.du[2]);
        let (ev, fv, gv) = (self.dv[0], self.dv[1], self.dv[2]);
        let evv = self.dvv[0];
        let fuv = self.duv[1];
        let guu = self.duu[2];
        let m1 = [
            [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
            [fv - 0.5 * gu, e, f],
            [0.5 * gv, f, g],
        ];
        let m2 = [[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e, f], [0.5 * gu, f, g]];
        (det3(&m1) - det3(&m2)) / self.det().powi(2)
    }

    /// Christoffel symbols `Γ^k_ij`, indexed `[k][i][j]`.
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let g = [[self.g[0], self.g[1]], [self.g[1], self.g[2]]];
        let det = self.det();
        let ginv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        // dg[m][i][j] = ∂_m g_ij
        let d = [self.du, self.dv];
        let dg = |m: usize, i: usize, j: usize| -> f64 {
            let idx = if i == j { 2 * i } else { 1 };
            d[m][idx]
        };
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for l in 0..2 {
                        s += 0.5 * ginv[k][l] * (dg(i, l, j) + dg(j, l, i) - dg(l, i, j));
                    }
                    out[k][i][j] = s;
                }
            }
        }
        out
    }

    /// Gram-Schmidt frame: rows are `e_1, e_2` in coordinate components.
    pub fn frame(&self) -> [[f64; 2]; 2] {
        let [e, f, g] = self.g;
        let se = e.sqrt();
        let s = (g - f * f / e).sqrt();
        [[1.0 / se, 0.0], [-f / (e * s), 1.0 / s]]
    }

    /// Levi-Civita connection form `ω(∂_μ) = g(∇_{∂_μ} e_1, e_2)` of the
    /// Gram-Schmidt frame, for `μ = u, v`.
    pub fn connection_form(&self) -> [f64; 2] {
        let fr = self.frame();
        let gam = self.christoffel();
        let gm = [[self.g[0], self.g[1]], [self.g[1], self.g[2]]];
        let [e, f, _] = self.g;
        // e_1 = a ∂_u with a = E^{-1/2}
        let a = 1.0 / e.sqrt();
        let da = [-0.5 * self.du[0] * e.powf(-1.5), -0.5 * self.dv[0] * e.powf(-1.5)];
        let _ = f;
        let mut out = [0.0; 2];
        for mu in 0..2 {
            // ∇_{∂μ}(a ∂_u) = (∂_μ a) ∂_u + a Γ^k_{μ u} ∂_k
            let v = [da[mu] + a * gam[0][mu][0], a * gam[1][mu][0]];
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += v[i] * gm[i][j] * fr[1][j];
                }
            }
            out[mu] = s;
        }
        out
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Metric samples of a chart on `[0, a] × [0, b]`, row-major with `u` as the
/// slow index (`idx = i·M + j`, `u_i = i·a/(N-1)`, `v_j = j·b/(M-1)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
    /// Optional offset of the chart origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    /// Exact metric jets; when present they replace finite differences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jets: Option<Vec<MetricJet>>,
}

impl ChartSpec {
    /// Samples an analytic metric given as a jet-valued function of `(u, v)`.
    pub fn from_jet_fn(
        origin: [f64; 2],
        a: f64,
        b: f64,
        n: usize,
        m: usize,
        jet: impl Fn(f64, f64) -> MetricJet,
    ) -> Self {
        let mut jets = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                let u = origin[0] + a * i as f64 / (n - 1) as f64;
                let v = origin[1] + b * j as f64 / (m - 1) as f64;
                jets.push(jet(u, v));
            }
        }
        Self {
            a,
            b,
            n,
            m,
            g11: jets.iter().map(|j| j.g[0]).collect(),
            g12: jets.iter().map(|j| j.g[1]).collect(),
            g22: jets.iter().map(|j| j.g[2]).collect(),
            origin: Some(origin),
            jets: Some(jets),
        }
    }

    /// Drops the exact jets so that curvature is recomputed from samples.
    pub fn samples_only(mut self) -> Self {
        self.jets = None;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub kind: DomainKind,
    /// Samples per axis (for the sphere: latitudes, longitudes).
    pub n: Vec<usize>,
    /// Side lengths per axis (torus and patch backends).
    pub lengths: Vec<f64>,
    /// Spacing per axis.
    pub h: Vec<f64>,
    pub l_max: Option<usize>,
    /// Coordinates per point (`z = 0` in 2-D).
    pub coords: Vec<[f64; 3]>,
    /// Metric jets per point (2-D backends only).
    pub jets: Vec<MetricJet>,
    /// Orthonormal frame per point: row `i` holds `e_i` in coordinate components.
    pub frame: Vec<[[f64; 3]; 3]>,
    pub curvature: Vec<f64>,
    pub weights: Vec<f64>,
    pub euler: Option<i32>,
    pub sphere: Option<SphereGrid>,
}

impl Domain {
    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Scalar curvature `S = 2K`.
    pub fn scalar_curvature(&self, idx: usize) -> f64 {
        2.0 * self.curvature[idx]
    }

    /// Weighted quadrature `Σ f w`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Lattice index for torus backends, with periodic wrap.
    pub fn lattice_index(&self, ijk: [i64; 3]) -> usize {
        let mut idx = 0usize;
        for ax in (0..self.dim()).rev() {
            let n = self.n[ax] as i64;
            idx = idx * self.n[ax] + ijk[ax].rem_euclid(n) as usize;
        }
        idx
    }

    /// Inverse of [`Domain::lattice_index`].
    pub fn lattice_coords(&self, mut idx: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        for (ax, o) in out.iter_mut().enumerate().take(self.dim()) {
            *o = (idx % self.n[ax]) as i64;
            idx /= self.n[ax];
        }
        out
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, DomainKind::Torus2 | DomainKind::Torus3)
    }
}

fn flat_jet() -> MetricJet {
    MetricJet { g: [1.0, 0.0, 1.0], ..Default::default() }
}

fn identity_frame() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn build_torus(lengths: &[f64], n: usize) -> Result<Domain> {
    if n < 4 {
        return Err(Error::Resolution(format!("torus needs N >= 4, got {n}")));
    }
    if lengths.iter().any(|&l| l.is_nan() || l <= 0.0 || l.is_infinite()) {
        return Err(Error::Geometry(format!("side lengths must be positive, got {lengths:?}")));
    }
    let dim = lengths.len();
    let h: Vec<f64> = lengths.iter().map(|l| l / n as f64).collect();
    let total = n.pow(dim as u32);
    let w: f64 = h.iter().product();
    let mut dom = Domain {
        kind: if dim == 2 { DomainKind::Torus2 } else { DomainKind::Torus3 },
        n: vec![n; dim],
        lengths: lengths.to_vec(),
        h,
        l_max: None,
        coords: Vec::with_capacity(total),
        jets: if dim == 2 { vec![flat_jet(); total] } else { Vec::new() },
        frame: vec![identity_frame(); total],
        curvature: vec![0.0; total],
        weights: vec![w; total],
        euler: if dim == 2 { Some(0) } else { None },
        sphere: None,
    };
    for idx in 0..total {
        let c = dom.lattice_coords(idx);
        let mut x = [0.0; 3];
        for ax in 0..dim {
            x[ax] = c[ax] as f64 * dom.h[ax];
        }
        dom.coords.push(x);
    }
    Ok(dom)
}

/// Flat periodic `N × N` lattice on `[0, L1) × [0, L2)`.
pub fn build_torus2(l1: f64, l2: f64, n: usize) -> Result<Domain> {
    build_torus(&[l1, l2], n)
}

/// Flat periodic `N³` lattice.
pub fn build_torus3(lengths: [f64; 3], n: usize) -> Result<Domain> {
    build_torus(&lengths, n)
}

/// Unit round sphere with a spectral basis truncated at `l_max`.
pub fn build_sphere_ladder(l_max: usize) -> Result<Domain> {
    if l_max < 2 {
        return Err(Error::Resolution(format!("sphere ladder needs l_max >= 2, got {l_max}")));
    }
    let n_theta = 2 * (l_max + 2);
    let grid = SphereGrid::new(n_theta, 2 * n_theta);
    let coords = grid.coords();
    let weights = grid.weights();
    let jets = coords.iter().map(|c| sphere_jet(c[0])).collect();
    let frame = coords
        .iter()
        .map(|c| [[1.0, 0.0, 0.0], [0.0, 1.0 / c[0].sin(), 0.0], [0.0, 0.0, 0.0]])
        .collect();
    let np = weights.len();
    Ok(Domain {
        kind: DomainKind::SphereLadder,
        n: vec![grid.theta.len(), grid.phi.len()],
        lengths: vec![PI, 2.0 * PI],
        h: vec![PI / grid.theta.len() as f64, 2.0 * PI / grid.phi.len() as f64],
        l_max: Some(l_max),
        coords,
        jets,
        frame,
        curvature: vec![1.0; np],
        weights,
        euler: Some(2),
        sphere: Some(grid),
    })
}

/// Metric jet of the unit sphere in colatitude/longitude.
pub fn sphere_jet(theta: f64) -> MetricJet {
    let (s, c) = theta.sin_cos();
    MetricJet {
        g: [1.0, 0.0, s * s],
        du: [0.0, 0.0, 2.0 * s * c],
        duu: [0.0, 0.0, 2.0 * (c * c - s * s)],
        ..Default::default()
    }
}

/// Chart patch with Gram-Schmidt frame and Brioschi curvature.
pub fn build_patch2(chart: &ChartSpec) -> Result<Domain> {
    let (n, m) = (chart.n, chart.m);
    if n < 4 || m < 4 {
        return Err(Error::Resolution(format!("patch needs at least 4x4 samples, got {n}x{m}")));
    }
    if !(chart.a > 0.0 && chart.b > 0.0) {
        return Err(Error::Geometry("patch side lengths must be positive".into()));
    }
    let np = n * m;
    for (name, arr) in [("g11", &chart.g11), ("g12", &chart.g12), ("g22", &chart.g22)] {
        if arr.len() != np {
            return Err(Error::Parse(format!("{name} has {} samples, expected {np}", arr.len())));
        }
    }
    for k in 0..np {
        let (e, f, g) = (chart.g11[k], chart.g12[k], chart.g22[k]);
        if !(e > 0.0 && e * g - f * f > 0.0) {
            return Err(Error::Geometry(format!("metric not positive definite at sample {k}")));
        }
    }
    let hu = chart.a / (n - 1) as f64;
    let hv = chart.b / (m - 1) as f64;
    let jets = match &chart.jets {
        Some(j) if j.len() == np => j.clone(),
        Some(j) => return Err(Error::Parse(format!("jets has {} entries, expected {np}", j.len()))),
        None => fd_jets(chart, hu, hv),
    };
    let origin = chart.origin.unwrap_or([0.0, 0.0]);
    let mut coords = Vec::with_capacity(np);
    let mut frame = Vec::with_capacity(np);
    let mut curvature = Vec::with_capacity(np);
    let mut weights = Vec::with_capacity(np);
    for i in 0..n {
        for j in 0..m {
            let jet = &jets[i * m + j];
            coords.push([origin[0] + i as f64 * hu, origin[1] + j as f64 * hv, 0.0]);
            let fr = jet.frame();
            frame.push([[fr[0][0], fr[0][1], 0.0], [fr[1][0], fr[1][1], 0.0], [0.0; 3]]);
            curvature.push(jet.brioschi());
            weights.push(jet.det().sqrt() * hu * hv);
        }
    }
    Ok(Domain {
        kind: DomainKind::Patch2,
        n: vec![n, m],
        lengths: vec![chart.a, chart.b],
        h: vec![hu, hv],
        l_max: None,
        coords,
        jets,
        frame,
        curvature,
        weights,
        euler: None,
        sphere: None,
    })
}

/// Second-order first derivative along a line of samples; one-sided at the ends.
fn d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Second-order second derivative; one-sided four-point stencil at the ends.
fn d2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = h * h;
    (0..n)
        .map(|i| {
            if i == 0 {
                (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
            } else if i == n - 1 {
                (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2
            } else {
                (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2
            }
        })
        .collect()
}

fn fd_jets(chart: &ChartSpec, hu: f64, hv: f64) -> Vec<MetricJet> {
    let (n, m) = (chart.n, chart.m);
    let mut jets = vec![MetricJet::default(); n * m];
    for (c, arr) in [&chart.g11, &chart.g12, &chart.g22].into_iter().enumerate() {
        let along_u = |field: &[f64], op: &dyn Fn(&[f64], f64) -> Vec<f64>| {
            let mut out = vec![0.0; n * m];
            for j in 0..m {
                let line: Vec<f64> = (0..n).map(|i| field[i * m + j]).collect();
                for (i, v) in op(&line, hu).into_iter().enumerate() {
                    out[i * m + j] = v;
                }
            }
            out
        };
        let along_v = |field: &[f64], op: &dyn Fn(&[f64], f64) -> Vec<f64>| {
            let mut out = vec![0.0; n * m];
            for i in 0..n {
                let v = op(&field[i * m..(i + 1) * m], hv);
                out[i * m..(i + 1) * m].copy_from_slice(&v);
            }
            out
        };
        let du = along_u(arr, &d1);
        let dv = along_v(arr, &d1);
        let duu = along_u(arr, &d2);
        let dvv = along_v(arr, &d2);
        let duv = along_v(&du, &d1);
        for k in 0..n * m {
            jets[k].g[c] = arr[k];
            jets[k].du[c] = du[k];
            jets[k].dv[c] = dv[k];
            jets[k].duu[c] = duu[k];
            jets[k].duv[c] = duv[k];
            jets[k].dvv[c] = dvv[k];
        }
    }
    jets
}

/// `|Σ K w − 2πχ|` on closed surfaces.
pub fn gauss_bonnet_check(d: &Domain) -> Result<f64> {
    match (d.kind, d.euler) {
        (DomainKind::Torus2 | DomainKind::SphereLadder, Some(chi)) => {
            Ok((d.integrate(&d.curvature) - 2.0 * PI * chi as f64).abs())
        }
        _ => Err(Error::DomainKind(format!("Gauss-Bonnet needs a closed surface, got {}", d.kind.name()))),
    }
}

/// Gauss-Bonnet on an `n × 2n` latitude-longitude grid of the unit sphere,
/// with curvature from the Brioschi formula on the coordinate metric and
/// Gaussian latitudes for the quadrature.
pub fn sphere_latlong_gauss_bonnet(n: usize) -> f64 {
    let grid = SphereGrid::new(n, 2 * n);
    let w = grid.weights();
    let total: f64 = grid.coords().iter().zip(&w).map(|(c, w)| sphere_jet(c[0]).brioschi() * w).sum();
    (total - 4.0 * PI).abs()
}
