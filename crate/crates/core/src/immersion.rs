//! Surfaces in S²×ℝ (with S³ and ℝ³ companions): induced data `(g, A, T, f)`,
//! Daniel's compatibility equations, generalized Killing spinors and the
//! restriction of ambient parallel/Killing spinors.
//!
//! Conventions. `A X = −∇_X ν` is the shape operator, `∂t = T + fν`, and the
//! adapted frame `(e₁, e₂, ν)` is positively oriented. Surface spinors use the
//! fixed representation of [`crate::clifford`]; an ambient spinor `ψ` in the
//! adapted frame maps to it by `φ = diag(1, −i)·ψ`, which turns
//! `X•φ = X·ν·ψ` into the surface generators. The auxiliary connection on the
//! surface has curvature `Ω₁₂ = −f`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{bar, e2, e3, norm_sq, re_dot, vec2_mat, vol2, CliffMat, Spinor};
use crate::domains::{build_patch2, ChartSpec, Domain, MetricJet};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::verify::{ExampleCase, ExampleData, SurfaceSample};

/// Tolerance of the structural constraint `f² + ‖T‖² = 1`.
pub const CONSTRAINT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ambient frame of an adapted frame at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientFrame {
    /// `rot[j][k] = ⟨e_k, e'_j⟩` with `(e₁, e₂, e₃) = (e₁, e₂, ν)`.
    pub rot: [[f64; 3]; 3],
    /// Restricted auxiliary connection on `(∂_u, ∂_v)`.
    pub l_form: [f64; 2],
}

/// Induced data of a surface patch. Tensors are in the Gram-Schmidt frame of
/// the chart.
#[derive(Debug, Clone)]
pub struct ImmersionData {
    pub label: String,
    pub chart: ChartSpec,
    pub domain: Domain,
    /// Weingarten operator.
    pub a: Vec<[[f64; 2]; 2]>,
    pub t: Vec<[f64; 2]>,
    pub f: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub ii_norm: Vec<f64>,
    /// Present for surfaces generated inside S²×ℝ.
    pub ambient: Option<Vec<AmbientFrame>>,
}

impl ImmersionData {
    pub fn new(
        label: impl Into<String>,
        chart: ChartSpec,
        a: Vec<[[f64; 2]; 2]>,
        t: Vec<[f64; 2]>,
        f: Vec<f64>,
        ambient: Option<Vec<AmbientFrame>>,
    ) -> Result<Self> {
        let domain = build_patch2(&chart)?;
        let np = domain.n_points();
        if a.len() != np || t.len() != np || f.len() != np {
            return Err(Error::InvalidArgument(format!("immersion fields must have {np} samples")));
        }
        for k in 0..np {
            let c = f[k] * f[k] + t[k][0] * t[k][0] + t[k][1] * t[k][1] - 1.0;
            if c.abs() > CONSTRAINT_TOL {
                return Err(Error::Geometry(format!("f² + |T|² − 1 = {c:.3e} at sample {k}")));
            }
            if (a[k][0][1] - a[k][1][0]).abs() > 1e-12 {
                return Err(Error::Geometry(format!("Weingarten operator not symmetric at sample {k}")));
            }
        }
        let mean_curvature = a.iter().map(|m| 0.5 * (m[0][0] + m[1][1])).collect();
        let ii_norm = a.iter().map(|m| m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()).collect();
        Ok(Self { label: label.into(), chart, domain, a, t, f, mean_curvature, ii_norm, ambient })
    }

    pub fn n_points(&self) -> usize {
        self.f.len()
    }

    pub fn constraint_defect(&self) -> f64 {
        self.f
            .iter()
            .zip(&self.t)
            .map(|(f, t)| (f * f + t[0] * t[0] + t[1] * t[1] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Samples for the pointwise S²×ℝ identity `H² = S/4 + |II|²/4 − f²/2`.
    pub fn to_example_data(&self) -> ExampleData {
        let samples = (0..self.n_points())
            .map(|k| SurfaceSample {
                scalar_curvature: self.domain.scalar_curvature(k),
                mean_curvature: self.mean_curvature[k],
                ii: self.a[k],
                f: self.f[k],
                weight: self.domain.weights[k],
            })
            .collect();
        ExampleData { label: self.label.clone(), case: ExampleCase::S2rSurface, samples, euler: None }
    }

    /// Frame derivative `e_i(F)` of a scalar sample field.
    fn frame_derivs(&self, field: &[f64]) -> Vec<[f64; 2]> {
        let (du, dv) = grid_partials(&self.domain, field);
        (0..field.len())
            .map(|k| {
                let fr = self.domain.frame[k];
                [fr[0][0] * du[k] + fr[0][1] * dv[k], fr[1][0] * du[k] + fr[1][1] * dv[k]]
            })
            .collect()
    }

    /// Connection form evaluated on the frame, `ω(e_i)`.
    fn omega_frame(&self) -> Vec<[f64; 2]> {
        (0..self.n_points())
            .map(|k| {
                let w = self.domain.jets[k].connection_form();
                let fr = self.domain.frame[k];
                [fr[0][0] * w[0] + fr[0][1] * w[1], fr[1][0] * w[0] + fr[1][1] * w[1]]
            })
            .collect()
    }
}

/// Fourth-order first derivative along one grid line, with one-sided
/// stencils at the ends.
fn d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "fourth-order stencils need five samples");
    let mut out = vec![0.0; n];
    for k in 2..n - 2 {
        out[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
    }
    let fwd0 = |g: &dyn Fn(usize) -> f64| (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) / (12.0 * h);
    let fwd1 = |g: &dyn Fn(usize) -> f64| (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) / (12.0 * h);
    out[0] = fwd0(&|i| f[i]);
    out[1] = fwd1(&|i| f[i]);
    out[n - 1] = -fwd0(&|i| f[n - 1 - i]);
    out[n - 2] = -fwd1(&|i| f[n - 1 - i]);
    out
}

/// Coordinate partials `(∂_u F, ∂_v F)` of a patch field (`idx = i·M + j`).
pub fn grid_partials(d: &Domain, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (d.n[0], d.n[1]);
    let mut du = vec![0.0; n * m];
    let mut dv = vec![0.0; n * m];
    for j in 0..m {
        let line: Vec<f64> = (0..n).map(|i| field[i * m + j]).collect();
        for (i, v) in d1(&line, d.h[0]).into_iter().enumerate() {
            du[i * m + j] = v;
        }
    }
    for i in 0..n {
        for (j, v) in d1(&field[i * m..(i + 1) * m], d.h[1]).into_iter().enumerate() {
            dv[i * m + j] = v;
        }
    }
    (du, dv)
}

/// Partials of a spinor field, component by component.
fn spinor_partials(d: &Domain, psi: &[Spinor]) -> [Vec<Spinor>; 2] {
    let mut out = [vec![Spinor::zeros(); psi.len()], vec![Spinor::zeros(); psi.len()]];
    for c in 0..2 {
        for part in 0..2 {
            let comp: Vec<f64> = psi.iter().map(|p| if part == 0 { p[c].re } else { p[c].im }).collect();
            let (du, dv) = grid_partials(d, &comp);
            for k in 0..psi.len() {
                let unit = if part == 0 { Complex64::new(1.0, 0.0) } else { I };
                out[0][k][c] += unit * du[k];
                out[1][k][c] += unit * dv[k];
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// generators

/// Embedding jet of a chart of S²×ℝ. Vectors are components in the ambient
/// orthonormal frame `(e_θ, e_φ, ∂t)` at the image point; second derivatives
/// are ambient covariant derivatives.
#[derive(Debug, Clone, Copy)]
pub struct AmbientJet {
    pub metric: MetricJet,
    pub xu: [f64; 3],
    pub xv: [f64; 3],
    pub xuu: [f64; 3],
    pub xuv: [f64; 3],
    pub xvv: [f64; 3],
    /// Restriction of the ambient auxiliary connection `cos θ dφ`.
    pub l_form: [f64; 2],
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn comb(a: f64, x: [f64; 3], b: f64, y: [f64; 3]) -> [f64; 3] {
    [a * x[0] + b * y[0], a * x[1] + b * y[1], a * x[2] + b * y[2]]
}

/// Weingarten matrix, `T`, `f` and ambient rotation of an adapted frame.
type AdaptedData = ([[f64; 2]; 2], [f64; 2], f64, [[f64; 3]; 3]);

/// Adapted frame, Weingarten matrix in that frame and ambient rotation.
fn adapted(jet: &AmbientJet, vertical: [f64; 3]) -> AdaptedData {
    let fr = jet.metric.frame();
    let e1 = comb(fr[0][0], jet.xu, fr[0][1], jet.xv);
    let e2 = comb(fr[1][0], jet.xu, fr[1][1], jet.xv);
    let nu = cross(e1, e2);
    let ii = [[dot3(jet.xuu, nu), dot3(jet.xuv, nu)], [dot3(jet.xuv, nu), dot3(jet.xvv, nu)]];
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    a[i][j] += fr[i][p] * fr[j][q] * ii[p][q];
                }
            }
        }
    }
    let t = [dot3(vertical, e1), dot3(vertical, e2)];
    let f = dot3(vertical, nu);
    let mut rot = [[0.0; 3]; 3];
    for j in 0..3 {
        rot[j] = [e1[j], e2[j], nu[j]];
    }
    (a, t, f, rot)
}

/// Induced data of an analytic S²×ℝ chart on `origin + [0, a] × [0, b]`.
pub fn from_ambient(
    label: &str,
    origin: [f64; 2],
    extent: [f64; 2],
    n: usize,
    m: usize,
    jet: impl Fn(f64, f64) -> AmbientJet,
) -> Result<ImmersionData> {
    let mut jets = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let u = origin[0] + extent[0] * i as f64 / (n - 1) as f64;
            let v = origin[1] + extent[1] * j as f64 / (m - 1) as f64;
            jets.push(jet(u, v));
        }
    }
    let chart = ChartSpec::from_jet_fn(origin, extent[0], extent[1], n, m, |u, v| jet(u, v).metric);
    let (mut a, mut t, mut f, mut amb) = (vec![], vec![], vec![], vec![]);
    for j in &jets {
        let (aa, tt, ff, rot) = adapted(j, [0.0, 0.0, 1.0]);
        a.push(aa);
        t.push(tt);
        f.push(ff);
        amb.push(AmbientFrame { rot, l_form: j.l_form });
    }
    for m in a.iter_mut() {
        let s = 0.5 * (m[0][1] + m[1][0]);
        m[0][1] = s;
        m[1][0] = s;
    }
    ImmersionData::new(label, chart, a, t, f, Some(amb))
}

/// Height function jet `[h, h_θ, h_φ, h_θθ, h_θφ, h_φφ, h_θθθ, h_θθφ, h_θφφ, h_φφφ]`.
pub type HeightJet = [f64; 10];

/// Graph `(p, h(p))` over a colatitude/longitude patch of S².
pub fn induced_data_graph(
    label: &str,
    origin: [f64; 2],
    extent: [f64; 2],
    n: usize,
    m: usize,
    h: impl Fn(f64, f64) -> HeightJet,
) -> Result<ImmersionData> {
    for i in [0, 1] {
        let th = origin[0] + i as f64 * extent[0];
        if th <= 1e-3 || th >= PI - 1e-3 {
            return Err(Error::Geometry("graph patch must avoid the coordinate poles".into()));
        }
    }
    from_ambient(label, origin, extent, n, m, |th, ph| graph_jet(th, h(th, ph)))
}

fn graph_jet(th: f64, h: HeightJet) -> AmbientJet {
    let (s, c) = th.sin_cos();
    let [_, ht, hp, htt, htp, hpp, httt, http, htpp, hppp] = h;
    let g = [1.0 + ht * ht, ht * hp, s * s + hp * hp];
    let du = [2.0 * ht * htt, htt * hp + ht * htp, 2.0 * s * c + 2.0 * hp * htp];
    let dv = [2.0 * ht * htp, htp * hp + ht * hpp, 2.0 * hp * hpp];
    let duu = [
        2.0 * (htt * htt + ht * httt),
        httt * hp + 2.0 * htt * htp + ht * http,
        2.0 * (c * c - s * s) + 2.0 * (htp * htp + hp * http),
    ];
    let duv = [
        2.0 * (htt * htp + ht * http),
        http * hp + htt * hpp + htp * htp + ht * htpp,
        2.0 * (htp * hpp + hp * htpp),
    ];
    let dvv = [2.0 * (htp * htp + ht * htpp), htpp * hp + 2.0 * htp * hpp + ht * hppp, 2.0 * (hpp * hpp + hp * hppp)];
    AmbientJet {
        metric: MetricJet { g, du, dv, duu, duv, dvv },
        xu: [1.0, 0.0, ht],
        xv: [0.0, s, hp],
        xuu: [0.0, 0.0, htt],
        xuv: [0.0, c, htp],
        xvv: [-s * c, 0.0, hpp],
        l_form: [0.0, c],
    }
}

/// Default colatitude/longitude window of the graph generators.
pub const GRAPH_ORIGIN: [f64; 2] = [0.6, 0.0];
pub const GRAPH_EXTENT: [f64; 2] = [1.6, 1.5];

/// Horizontal slice `S² × {t₀}`.
pub fn slice(n: usize) -> Result<ImmersionData> {
    induced_data_graph("slice", GRAPH_ORIGIN, GRAPH_EXTENT, n, n, |_, _| [0.0; 10])
}

/// Graph of `h = ε cos θ`.
pub fn tilted_graph(eps: f64, n: usize) -> Result<ImmersionData> {
    induced_data_graph("tilted_graph", GRAPH_ORIGIN, GRAPH_EXTENT, n, n, |th, _| {
        let (s, c) = th.sin_cos();
        [eps * c, -eps * s, 0.0, -eps * c, 0.0, 0.0, eps * s, 0.0, 0.0, 0.0]
    })
}

/// Vertical cylinder over the latitude circle of colatitude `θ₀`, charted by
/// `(φ, t)`.
pub fn latitude_cylinder(theta0: f64, n: usize) -> Result<ImmersionData> {
    if theta0 <= 0.0 || theta0 >= PI {
        return Err(Error::Geometry(format!("latitude θ₀ = {theta0} outside (0, π)")));
    }
    let (s, c) = theta0.sin_cos();
    let label = if (theta0 - PI / 2.0).abs() < 1e-15 { "great_circle_cylinder" } else { "latitude_cylinder" };
    from_ambient(label, [0.0, -0.75], [1.5, 1.5], n, n, |_, _| AmbientJet {
        metric: MetricJet { g: [s * s, 0.0, 1.0], ..Default::default() },
        xu: [0.0, s, 0.0],
        xv: [0.0, 0.0, 1.0],
        xuu: [-s * c, 0.0, 0.0],
        xuv: [0.0; 3],
        xvv: [0.0; 3],
        l_form: [c, 0.0],
    })
}

pub fn great_circle_cylinder(n: usize) -> Result<ImmersionData> {
    latitude_cylinder(PI / 2.0, n)
}

/// Compatibility channel of the Daniel equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Gauss,
    Codazzi,
    GradT,
    Df,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Gauss, Channel::Codazzi, Channel::GradT, Channel::Df];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Gauss => "gauss",
            Channel::Codazzi => "codazzi",
            Channel::GradT => "grad_t",
            Channel::Df => "df",
        }
    }
}

/// Data that violates exactly one Daniel equation, with defect size `eps`,
/// while keeping `f² + ‖T‖² = 1` exact.
pub fn defect_data(channel: Channel, eps: f64, n: usize) -> Result<ImmersionData> {
    let np = n * n;
    // great-circle cylinder chart (φ, t)
    let flat = || {
        ChartSpec::from_jet_fn([0.0, -0.75], 1.5, 1.5, n, n, |_, _| MetricJet {
            g: [1.0, 0.0, 1.0],
            ..Default::default()
        })
    };
    let label = format!("defect_{}", channel.name());
    match channel {
        Channel::Gauss => {
            // slice of a sphere of curvature 1 + ε
            let r2 = 1.0 / (1.0 + eps);
            let chart = ChartSpec::from_jet_fn(GRAPH_ORIGIN, GRAPH_EXTENT[0], GRAPH_EXTENT[1], n, n, |th, _| {
                let (s, c) = th.sin_cos();
                MetricJet {
                    g: [r2, 0.0, r2 * s * s],
                    du: [0.0, 0.0, 2.0 * r2 * s * c],
                    duu: [0.0, 0.0, 2.0 * r2 * (c * c - s * s)],
                    ..Default::default()
                }
            });
            ImmersionData::new(label, chart, vec![[[0.0; 2]; 2]; np], vec![[0.0; 2]; np], vec![1.0; np], None)
        }
        Channel::Codazzi => {
            let chart = flat();
            let a = (0..np).map(|k| {
                let v = -0.75 + 1.5 * (k % n) as f64 / (n - 1) as f64;
                [[eps * v, 0.0], [0.0, 0.0]]
            });
            ImmersionData::new(label, chart, a.collect(), vec![[0.0, 1.0]; np], vec![0.0; np], None)
        }
        Channel::GradT => {
            let chart = flat();
            let t = (0..np).map(|k| {
                let u = 1.5 * (k / n) as f64 / (n - 1) as f64;
                let (s, c) = (eps * u).sin_cos();
                [s, c]
            });
            ImmersionData::new(label, chart, vec![[[0.0; 2]; 2]; np], t.collect(), vec![0.0; np], None)
        }
        Channel::Df => {
            let mut base = latitude_cylinder(1.0, n)?;
            let k0 = base.a[0][0][0];
            for m in base.a.iter_mut() {
                *m = [[k0, eps], [eps, eps * eps / k0]];
            }
            base.label = label;
            base.ambient = None;
            Ok(base)
        }
    }
}

/// Adds `eps·Id` to the Weingarten operator (constraint untouched).
pub fn perturb_weingarten(d: &ImmersionData, eps: f64) -> ImmersionData {
    let mut out = d.clone();
    for m in out.a.iter_mut() {
        m[0][0] += eps;
        m[1][1] += eps;
    }
    for (h, m) in out.mean_curvature.iter_mut().zip(&out.a) {
        *h = 0.5 * (m[0][0] + m[1][1]);
    }
    for (n, m) in out.ii_norm.iter_mut().zip(&out.a) {
        *n = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    }
    out.label = format!("{}_perturbed", d.label);
    out.ambient = None;
    out
}

// ---------------------------------------------------------------------------
// compatibility equations

/// Pointwise residual fields of the four Daniel equations.
#[derive(Debug, Clone)]
pub struct DanielResiduals {
    /// `G − det A − f²`.
    pub gauss: Vec<f64>,
    /// `(d^∇A)(e₁, e₂) − f(T₂e₁ − T₁e₂)`, frame components.
    pub codazzi: Vec<[f64; 2]>,
    /// `∇_{e_i}T − f A e_i`, indexed `[i][component]`.
    pub grad_t: Vec<[[f64; 2]; 2]>,
    /// `e_i(f) + g(A e_i, T)`.
    pub df: Vec<[f64; 2]>,
}

impl DanielResiduals {
    pub fn channel_field(&self, c: Channel) -> Vec<f64> {
        let n2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match c {
            Channel::Gauss => self.gauss.iter().map(|v| v.abs()).collect(),
            Channel::Codazzi => self.codazzi.iter().map(|v| n2(v)).collect(),
            Channel::GradT => self.grad_t.iter().map(|m| n2(&[m[0][0], m[0][1], m[1][0], m[1][1]])).collect(),
            Channel::Df => self.df.iter().map(|v| n2(v)).collect(),
        }
    }
}

pub fn daniel_residuals(d: &ImmersionData) -> DanielResiduals {
    let np = d.n_points();
    let om = d.omega_frame();
    let comp = |get: &dyn Fn(usize) -> f64| d.frame_derivs(&(0..np).map(get).collect::<Vec<_>>());
    let da11 = comp(&|k| d.a[k][0][0]);
    let da12 = comp(&|k| d.a[k][0][1]);
    let da22 = comp(&|k| d.a[k][1][1]);
    let dt1 = comp(&|k| d.t[k][0]);
    let dt2 = comp(&|k| d.t[k][1]);
    let dff = d.frame_derivs(&d.f);
    let mut out = DanielResiduals {
        gauss: vec![0.0; np],
        codazzi: vec![[0.0; 2]; np],
        grad_t: vec![[[0.0; 2]; 2]; np],
        df: vec![[0.0; 2]; np],
    };
    for k in 0..np {
        let a = d.a[k];
        let t = d.t[k];
        let f = d.f[k];
        let w = om[k];
        let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        out.gauss[k] = d.domain.curvature[k] - det_a - f * f;
        // (∇_{e1}A)e2 − (∇_{e2}A)e1 with ∇e1 = ω e2, ∇e2 = −ω e1
        let nab1_e2 = [da12[k][0] - w[0] * a[1][1] + w[0] * a[0][0], da22[k][0] + 2.0 * w[0] * a[0][1]];
        let nab2_e1 = [da11[k][1] - 2.0 * w[1] * a[0][1], da12[k][1] + w[1] * a[0][0] - w[1] * a[1][1]];
        out.codazzi[k] = [nab1_e2[0] - nab2_e1[0] - f * t[1], nab1_e2[1] - nab2_e1[1] + f * t[0]];
        for i in 0..2 {
            let nab_t = [dt1[k][i] - w[i] * t[1], dt2[k][i] + w[i] * t[0]];
            out.grad_t[k][i] = [nab_t[0] - f * a[0][i], nab_t[1] - f * a[1][i]];
            out.df[k][i] = dff[k][i] + a[0][i] * t[0] + a[1][i] * t[1];
        }
    }
    out
}

/// Residual report of Daniel's equations; `tol` bounds each channel's L∞ norm.
pub fn daniel_check(d: &ImmersionData, tol: f64) -> Report {
    let res = daniel_residuals(d);
    let mut r = Report::new(format!("daniel_{}", d.label));
    r.meta("backend", "patch").meta("N", d.domain.n[0]).meta("M", d.domain.n[1]);
    let area = d.domain.area();
    for c in Channel::ALL {
        let field = res.channel_field(c);
        let l2 = (field.iter().zip(&d.domain.weights).map(|(v, w)| v * v * w).sum::<f64>() / area).sqrt();
        let linf = field.iter().fold(0.0, |m: f64, v| m.max(*v));
        r.norm(c.name(), l2, linf).residual(c.name(), linf, tol);
    }
    r.residual("constraint", d.constraint_defect(), CONSTRAINT_TOL);
    r
}

// ---------------------------------------------------------------------------
// spinors

/// `diag(1, −i)`: ambient adapted-frame spinors to the surface representation.
fn to_surface(psi: &Spinor) -> Spinor {
    Spinor::new(psi[0], -I * psi[1])
}

/// `SU(2)` lift `U` of a frame change: `U σ_j U† = Σ_k R_jk σ_k`, so that
/// components in the new frame are `U ψ'`.
pub fn spin_lift(rot: &[[f64; 3]; 3]) -> CliffMat {
    // unit quaternion of the active rotation M = Rᵀ
    let m = |i: usize, j: usize| rot[j][i];
    let tr = m(0, 0) + m(1, 1) + m(2, 2);
    let (w, x, y, z);
    if tr > 0.0 {
        let s = 2.0 * (tr + 1.0).sqrt();
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2) {
        let s = 2.0 * (1.0 + m(0, 0) - m(1, 1) - m(2, 2)).sqrt();
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if m(1, 1) > m(2, 2) {
        let s = 2.0 * (1.0 + m(1, 1) - m(0, 0) - m(2, 2)).sqrt();
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        let s = 2.0 * (1.0 + m(2, 2) - m(0, 0) - m(1, 1)).sqrt();
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    // U = w − i(xσ₁ + yσ₂ + zσ₃)
    CliffMat::new(Complex64::new(w, -z), Complex64::new(-y, -x), Complex64::new(y, -x), Complex64::new(w, z))
}

/// Restriction of an ambient spinor that is constant in the ambient frame,
/// with the `±U` ambiguity fixed by continuity along the sweep.
fn restrict(d: &Domain, rots: &[[[f64; 3]; 3]], psi0: Spinor) -> Vec<Spinor> {
    let m = d.n[1];
    let mut lifts: Vec<CliffMat> = Vec::with_capacity(rots.len());
    for (k, rot) in rots.iter().enumerate() {
        let mut u = spin_lift(rot);
        let prev = if k % m > 0 { Some(k - 1) } else if k >= m { Some(k - m) } else { None };
        if let Some(p) = prev {
            if (lifts[p].adjoint() * u).trace().re < 0.0 {
                u = -u;
            }
        }
        lifts.push(u);
    }
    lifts.iter().map(|u| to_surface(&(u * psi0))).collect()
}

/// `X•φ` for frame components `x`.
fn cliff(x: [f64; 2], phi: &Spinor) -> Spinor {
    vec2_mat(x) * phi
}

/// Frame covariant derivatives `∇_{e_i}φ` from sampled values, for the
/// connection `d + ½ω e₁e₂ + (i/2)a`.
fn covariant_frame_derivs(d: &Domain, phi: &[Spinor], l_form: &[[f64; 2]]) -> Vec<[Spinor; 2]> {
    let [pu, pv] = spinor_partials(d, phi);
    (0..phi.len())
        .map(|k| {
            let w = d.jets[k].connection_form();
            let nab = |mu: usize, dphi: &Spinor| {
                dphi + vol2() * phi[k] * Complex64::from(0.5 * w[mu]) + phi[k] * (0.5 * I * l_form[k][mu])
            };
            let (nu, nv) = (nab(0, &pu[k]), nab(1, &pv[k]));
            let fr = d.frame[k];
            let c = |a: f64| Complex64::from(a);
            [nu * c(fr[0][0]) + nv * c(fr[0][1]), nu * c(fr[1][0]) + nv * c(fr[1][1])]
        })
        .collect()
}

/// `T•φ + fφ − φ̄`.
pub fn constraint_vector(t: [f64; 2], f: f64, phi: &Spinor) -> Spinor {
    cliff(t, phi) + phi * Complex64::from(f) - bar(phi)
}

/// `θ = iφ − ifφ̄ + JT•φ` with `JT = (−T₂, T₁)`.
pub fn theta(t: [f64; 2], f: f64, phi: &Spinor) -> Spinor {
    phi * I - bar(phi) * (I * f) + cliff([-t[1], t[0]], phi)
}

/// `(T, f)` read off a spinor through `f|φ|² = Re(φ, φ̄)`,
/// `T₁|φ|² = Re(i e₂•φ, φ)` and `T₂|φ|² = −Re(i e₁•φ, φ)`.
pub fn recover_tf(phi: &Spinor) -> ([f64; 2], f64) {
    let n = norm_sq(phi);
    let t1 = re_dot(&(e2(1) * phi * I), phi) / n;
    let t2 = -re_dot(&(e2(0) * phi * I), phi) / n;
    ([t1, t2], re_dot(phi, &bar(phi)) / n)
}

/// Kernel of `φ ↦ T•φ + fφ − φ̄` at one point (one complex dimension when
/// `f² + |T|² = 1`), unit normalised.
fn constraint_kernel(t: [f64; 2], f: f64) -> Spinor {
    let mat = vec2_mat(t) + CliffMat::identity() * Complex64::from(f) - crate::clifford::vol2() * I;
    let rows = [mat.row(0).transpose(), mat.row(1).transpose()];
    let r = if rows[0].norm() >= rows[1].norm() { rows[0] } else { rows[1] };
    let k = Spinor::new(r[1], -r[0]);
    k / Complex64::from(k.norm())
}

/// Orthogonal projection of `φ₀` onto the constraint solutions at sample `k`.
pub fn project_constraint(d: &ImmersionData, k: usize, phi0: Spinor) -> Spinor {
    let kv = constraint_kernel(d.t[k], d.f[k]);
    kv * kv.dotc(&phi0)
}

/// Generalized Killing spinor propagated over a patch.
#[derive(Debug, Clone)]
pub struct GksField {
    pub phi: Vec<Spinor>,
    /// `|T•φ + fφ − φ̄| / |φ|` per sample.
    pub constraint: Vec<f64>,
    /// Path discrepancy `|φ_{uv} − φ_{vu}| / |φ|` per plaquette, stored at
    /// its lower corner (zero on the last row and column).
    pub curvature: Vec<f64>,
    /// Auxiliary connection used for the propagation (axial gauge).
    pub l_form: Vec<[f64; 2]>,
    pub warning: Option<String>,
}

impl GksField {
    pub fn max_constraint(&self) -> f64 {
        self.constraint.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    pub fn max_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m: f64, v| m.max(*v))
    }
}

/// Daniel residual above which propagation is flagged as path dependent.
pub const INTEGRABILITY_TOL: f64 = 1e-6;

/// Axial gauge `a = a_v dv` with `∂_u a_v = −f √det g`, so `Ω₁₂ = −f`.
fn axial_gauge(d: &ImmersionData) -> Vec<[f64; 2]> {
    let (n, m) = (d.domain.n[0], d.domain.n[1]);
    let dens: Vec<f64> = (0..d.n_points()).map(|k| -d.f[k] * d.domain.jets[k].det().sqrt()).collect();
    let mut out = vec![[0.0; 2]; n * m];
    for j in 0..m {
        let col = |i: usize| dens[i * m + j];
        for i in 1..n {
            // Simpson from two samples back; trapezoid for the first step
            out[i * m + j][1] = if i >= 2 {
                out[(i - 2) * m + j][1] + (col(i - 2) + 4.0 * col(i - 1) + col(i)) * d.domain.h[0] / 3.0
            } else {
                0.5 * (col(0) + col(1)) * d.domain.h[0]
            };
        }
    }
    out
}

fn gks_generator(d: &ImmersionData, l_form: &[[f64; 2]], k: usize, mu: usize) -> CliffMat {
    let w = d.domain.jets[k].connection_form();
    let fr = d.domain.frame[k];
    let det = fr[0][0] * fr[1][1] - fr[0][1] * fr[1][0];
    // ∂_μ = Σ_i F_{μi} e_i with F = E⁻¹
    let finv = [[fr[1][1] / det, -fr[0][1] / det], [-fr[1][0] / det, fr[0][0] / det]];
    let comps = [finv[mu][0], finv[mu][1]];
    let a = d.a[k];
    let ax = [a[0][0] * comps[0] + a[0][1] * comps[1], a[1][0] * comps[0] + a[1][1] * comps[1]];
    vol2() * Complex64::from(0.5 * w[mu])
        + CliffMat::identity() * (0.5 * I * l_form[k][mu])
        + vec2_mat(ax) * Complex64::from(0.5)
}

/// Solves `∇_{∂_μ}φ = −½A(∂_μ)•φ` by midpoint exponential steps: up the
/// first column, then along each row.
pub fn integrate_gks(d: &ImmersionData, phi0: Spinor) -> Result<GksField> {
    if phi0.norm() == 0.0 {
        return Err(Error::InvalidArgument("initial spinor must be non-zero".into()));
    }
    let (n, m) = (d.domain.n[0], d.domain.n[1]);
    let h = [d.domain.h[0], d.domain.h[1]];
    let l_form = axial_gauge(d);
    let gens: Vec<[CliffMat; 2]> =
        (0..d.n_points()).map(|k| [gks_generator(d, &l_form, k, 0), gks_generator(d, &l_form, k, 1)]).collect();
    let step = |from: usize, to: usize, mu: usize| -> CliffMat {
        let g: Matrix2<Complex64> = (gens[from][mu] + gens[to][mu]) * Complex64::from(-0.5 * h[mu]);
        g.exp()
    };
    let mut phi = vec![Spinor::zeros(); n * m];
    phi[0] = project_constraint(d, 0, phi0);
    if phi[0].norm() < 1e-12 * phi0.norm() {
        return Err(Error::Degenerate("initial spinor is orthogonal to the constraint solutions".into()));
    }
    for j in 1..m {
        phi[j] = step(j - 1, j, 1) * phi[j - 1];
    }
    for j in 0..m {
        for i in 1..n {
            let (p, q) = ((i - 1) * m + j, i * m + j);
            phi[q] = step(p, q, 0) * phi[p];
        }
    }
    let mut curvature = vec![0.0; n * m];
    for i in 0..n - 1 {
        for j in 0..m - 1 {
            let (k00, k10, k01, k11) = (i * m + j, (i + 1) * m + j, i * m + j + 1, (i + 1) * m + j + 1);
            let uv = step(k01, k11, 0) * step(k00, k01, 1) * phi[k00];
            let vu = step(k10, k11, 1) * step(k00, k10, 0) * phi[k00];
            curvature[k00] = (uv - vu).norm() / phi[k00].norm();
        }
    }
    let constraint =
        (0..n * m).map(|k| constraint_vector(d.t[k], d.f[k], &phi[k]).norm() / phi[k].norm()).collect();
    let dan = daniel_check(d, INTEGRABILITY_TOL);
    let warning = (!dan.pass).then(|| {
        let chans: Vec<&str> = dan.failures().iter().map(|c| c.name.as_str()).collect();
        format!("compatibility residuals above {INTEGRABILITY_TOL:e} in {chans:?}; propagation is path dependent")
    });
    Ok(GksField { phi, constraint, curvature, l_form, warning })
}

/// `|θ|²` per sample; it vanishes wherever the constraint holds.
pub fn theta_check(g: &GksField, d: &ImmersionData) -> Vec<f64> {
    (0..d.n_points()).map(|k| norm_sq(&theta(d.t[k], d.f[k], &g.phi[k]))).collect()
}

/// Converse direction on sampled data: the propagated spinor reproduces
/// `(T, f)` algebraically and `A` through `A_ij = 2Re(e_i•∇_jφ, φ)/|φ|²`.
pub fn equivalence_check(d: &ImmersionData, phi0: Spinor, tol: f64) -> Result<Report> {
    let g = integrate_gks(d, phi0)?;
    let nab = covariant_frame_derivs(&d.domain, &g.phi, &g.l_form);
    let (mut et, mut ef, mut ea) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..d.n_points() {
        let (t, f) = recover_tf(&g.phi[k]);
        et = et.max((t[0] - d.t[k][0]).abs()).max((t[1] - d.t[k][1]).abs());
        ef = ef.max((f - d.f[k]).abs());
        let n = norm_sq(&g.phi[k]);
        for i in 0..2 {
            for j in 0..2 {
                let mut e = [0.0; 2];
                e[i] = 1.0;
                let aij = 2.0 * re_dot(&cliff(e, &nab[k][j]), &g.phi[k]) / n;
                ea = ea.max((aij - d.a[k][i][j]).abs());
            }
        }
    }
    let mut r = Report::new(format!("equivalence_{}", d.label));
    r.meta("backend", "patch").meta("N", d.domain.n[0]);
    r.residual("plaquette", g.max_curvature(), tol)
        .residual("constraint", g.max_constraint(), tol)
        .residual("recovered_t", et, tol)
        .residual("recovered_f", ef, tol)
        .residual("recovered_a", ea, tol);
    if let Some(w) = &g.warning {
        r.meta("warning", w);
    }
    Ok(r)
}

/// Restriction of the parallel spinor of S²×ℝ to an analytic patch: the
/// generalized Killing equation, the constraint, `Ω₁₂ = −f` from both the
/// restricted connection and the ambient 2-form, and `Ω^Z·ψ = iψ`.
pub fn restriction_check_s2r(d: &ImmersionData, tol: f64) -> Result<Report> {
    let amb = d.ambient.as_ref().ok_or_else(|| Error::Unsupported("data carries no ambient frame".into()))?;
    let rots: Vec<_> = amb.iter().map(|a| a.rot).collect();
    let l_form: Vec<_> = amb.iter().map(|a| a.l_form).collect();
    let one = Complex64::new(1.0, 0.0);
    let phi = restrict(&d.domain, &rots, Spinor::new(one, ZERO));
    let nab = covariant_frame_derivs(&d.domain, &phi, &l_form);
    let (mut gks, mut cons, mut om_amb, mut om_z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..d.n_points() {
        let a = d.a[k];
        for i in 0..2 {
            let r = nab[k][i] + cliff([a[0][i], a[1][i]], &phi[k]) * Complex64::from(0.5);
            gks = gks.max(r.norm());
        }
        cons = cons.max(constraint_vector(d.t[k], d.f[k], &phi[k]).norm());
        let rot = rots[k];
        let om = |p: usize, q: usize| -(rot[0][p] * rot[1][q] - rot[1][p] * rot[0][q]);
        om_amb = om_amb.max((om(0, 1) + d.f[k]).abs());
        let psi = Spinor::new(phi[k][0], I * phi[k][1]);
        let lhs = e3(0) * e3(1) * psi * Complex64::from(om(0, 1))
            + e3(0) * e3(2) * psi * Complex64::from(om(0, 2))
            + e3(1) * e3(2) * psi * Complex64::from(om(1, 2));
        om_z = om_z.max((lhs - psi * I).norm());
    }
    let a_v: Vec<f64> = l_form.iter().map(|a| a[1]).collect();
    let a_u: Vec<f64> = l_form.iter().map(|a| a[0]).collect();
    let (dav, _) = grid_partials(&d.domain, &a_v);
    let (_, dau) = grid_partials(&d.domain, &a_u);
    let om_conn = (0..d.n_points())
        .map(|k| ((dav[k] - dau[k]) / d.domain.jets[k].det().sqrt() + d.f[k]).abs())
        .fold(0.0, f64::max);
    let mut r = Report::new(format!("restriction_{}", d.label));
    r.meta("backend", "patch").meta("ambient", "S2xR").meta("N", d.domain.n[0]);
    r.residual("generalized_killing", gks, tol)
        .residual("constraint", cons, tol)
        .residual("omega12_connection", om_conn, tol)
        .residual("omega12_ambient", om_amb, tol)
        .residual("ambient_omega_action", om_z, tol);
    Ok(r)
}

// ---------------------------------------------------------------------------
// S³ and ℝ³ companions

/// Embedding jet of a chart of S³ ⊂ ℝ⁴ (quaternion components `w, x, y, z`).
#[derive(Debug, Clone, Copy)]
pub struct R4Jet {
    pub metric: MetricJet,
    pub x: [f64; 4],
    pub xu: [f64; 4],
    pub xv: [f64; 4],
    pub xuu: [f64; 4],
    pub xuv: [f64; 4],
    pub xvv: [f64; 4],
}

/// Surface patch in S³ with its frame relative to the left-invariant frame
/// `(q·i, q·j, q·k)`, in which Killing spinors with `∇_Xψ = −½X·ψ` are constant.
#[derive(Debug, Clone)]
pub struct S3Patch {
    pub label: String,
    pub domain: Domain,
    pub a: Vec<[[f64; 2]; 2]>,
    pub rot: Vec<[[f64; 3]; 3]>,
}

fn dot4(a: [f64; 4], b: [f64; 4]) -> f64 {
    (0..4).map(|i| a[i] * b[i]).sum()
}

/// Left-invariant frame at `q`: `q·i`, `q·j`, `q·k`.
fn left_frame(q: [f64; 4]) -> [[f64; 4]; 3] {
    let [w, x, y, z] = q;
    [[-x, w, z, -y], [-y, -z, w, x], [-z, y, -x, w]]
}

/// Unit vector orthogonal to `a, b, c` (cofactor expansion).
fn cross4(a: [f64; 4], b: [f64; 4], c: [f64; 4]) -> [f64; 4] {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        let m = |r: [f64; 4]| [r[cols[0]], r[cols[1]], r[cols[2]]];
        let (p, q, r) = (m(a), m(b), m(c));
        dot3(p, cross(q, r))
    };
    let v = [minor(0), -minor(1), minor(2), -minor(3)];
    let n = dot4(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n, v[3] / n]
}

pub fn s3_patch(
    label: &str,
    origin: [f64; 2],
    extent: [f64; 2],
    n: usize,
    m: usize,
    jet: impl Fn(f64, f64) -> R4Jet,
) -> Result<S3Patch> {
    let chart = ChartSpec::from_jet_fn(origin, extent[0], extent[1], n, m, |u, v| jet(u, v).metric);
    let domain = build_patch2(&chart)?;
    let (mut a, mut rot) = (vec![], vec![]);
    for k in 0..domain.n_points() {
        let [u, v, _] = domain.coords[k];
        let j = jet(u, v);
        let fr = j.metric.frame();
        let lin = |p: f64, x: [f64; 4], q: f64, y: [f64; 4]| [0, 1, 2, 3].map(|i| p * x[i] + q * y[i]);
        let e1 = lin(fr[0][0], j.xu, fr[0][1], j.xv);
        let e2 = lin(fr[1][0], j.xu, fr[1][1], j.xv);
        let mut nu = cross4(j.x, e1, e2);
        let lf = left_frame(j.x);
        let mut r = [[0.0; 3]; 3];
        let fill = |r: &mut [[f64; 3]; 3], nu: [f64; 4]| {
            for jj in 0..3 {
                r[jj] = [dot4(e1, lf[jj]), dot4(e2, lf[jj]), dot4(nu, lf[jj])];
            }
        };
        fill(&mut r, nu);
        let det = dot3([r[0][0], r[1][0], r[2][0]], cross([r[0][1], r[1][1], r[2][1]], [r[0][2], r[1][2], r[2][2]]));
        if det < 0.0 {
            nu = nu.map(|c| -c);
            fill(&mut r, nu);
        }
        let ii = [[dot4(j.xuu, nu), dot4(j.xuv, nu)], [dot4(j.xuv, nu), dot4(j.xvv, nu)]];
        let mut am = [[0.0; 2]; 2];
        for i in 0..2 {
            for jj in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        am[i][jj] += fr[i][p] * fr[jj][q] * ii[p][q];
                    }
                }
            }
        }
        a.push(am);
        rot.push(r);
    }
    Ok(S3Patch { label: label.into(), domain, a, rot })
}

/// Clifford torus `(e^{iu}, e^{iv})/√2` over `[u₀, u₀ + ℓ] × [v₀, v₀ + ℓ]`.
pub fn clifford_torus_patch(origin: [f64; 2], side: f64, n: usize) -> Result<S3Patch> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    s3_patch("clifford_torus", origin, [side, side], n, n, |u, v| {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        R4Jet {
            metric: MetricJet { g: [0.5, 0.0, 0.5], ..Default::default() },
            x: [r * cu, r * su, r * cv, r * sv],
            xu: [-r * su, r * cu, 0.0, 0.0],
            xv: [0.0, 0.0, -r * sv, r * cv],
            xuu: [-r * cu, -r * su, 0.0, 0.0],
            xuv: [0.0; 4],
            xvv: [0.0, 0.0, -r * cv, -r * sv],
        }
    })
}

/// Distance sphere of radius `ρ` about `(1, 0, 0, 0)`, charted by `(θ, φ)`.
pub fn geodesic_sphere_patch(rho: f64, n: usize) -> Result<S3Patch> {
    let (sr, cr) = rho.sin_cos();
    let r2 = sr * sr;
    s3_patch("geodesic_sphere", GRAPH_ORIGIN, GRAPH_EXTENT, n, n, |th, ph| {
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        R4Jet {
            metric: MetricJet {
                g: [r2, 0.0, r2 * st * st],
                du: [0.0, 0.0, 2.0 * r2 * st * ct],
                duu: [0.0, 0.0, 2.0 * r2 * (ct * ct - st * st)],
                ..Default::default()
            },
            x: [cr, sr * st * cp, sr * st * sp, sr * ct],
            xu: [0.0, sr * ct * cp, sr * ct * sp, -sr * st],
            xv: [0.0, -sr * st * sp, sr * st * cp, 0.0],
            xuu: [0.0, -sr * st * cp, -sr * st * sp, -sr * ct],
            xuv: [0.0, -sr * ct * sp, sr * ct * cp, 0.0],
            xvv: [0.0, -sr * st * cp, -sr * st * sp, 0.0],
        }
    })
}

impl S3Patch {
    pub fn mean_curvature(&self, k: usize) -> f64 {
        0.5 * (self.a[k][0][0] + self.a[k][1][1])
    }

    /// Samples for the pointwise S³ identity `H² + ½ = S/4 + |II|²/4`.
    pub fn to_example_data(&self) -> ExampleData {
        let samples = (0..self.domain.n_points())
            .map(|k| SurfaceSample {
                scalar_curvature: self.domain.scalar_curvature(k),
                mean_curvature: self.mean_curvature(k),
                ii: self.a[k],
                f: 0.0,
                weight: self.domain.weights[k],
            })
            .collect();
        ExampleData { label: self.label.clone(), case: ExampleCase::S3Cmc, samples, euler: None }
    }
}

/// Restriction of a Killing spinor of S³: `∇_Xφ = −½A(X)•φ + ½J(X)•φ`,
/// `Y = 0`, `T^φ = ½A`, `|Q^φ|² = ½`, `Dφ = Hφ + e₁•e₂•φ` and
/// `D²φ = (H² + 1)φ` for constant `H`.
pub fn restriction_check_s3(p: &S3Patch, tol: f64) -> Report {
    let np = p.domain.n_points();
    let one = Complex64::new(1.0, 0.0);
    let zero_form = vec![[0.0; 2]; np];
    let phi = restrict(&p.domain, &p.rot, Spinor::new(one, ZERO));
    let nab = covariant_frame_derivs(&p.domain, &phi, &zero_form);
    let jmat = [[0.0, 1.0], [-1.0, 0.0]]; // J e₁ = e₂, J e₂ = −e₁, rows e_i
    let (mut kill, mut terr, mut qerr, mut yerr, mut derr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut dphi = vec![Spinor::zeros(); np];
    for k in 0..np {
        let a = p.a[k];
        let n = norm_sq(&phi[k]);
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            let r = nab[k][i] + cliff([a[0][i], a[1][i]], &phi[k]) * Complex64::from(0.5)
                - cliff(jmat[i], &phi[k]) * Complex64::from(0.5);
            kill = kill.max(r.norm());
            for j in 0..2 {
                let mut e = [0.0; 2];
                e[i] = 1.0;
                c[i][j] = re_dot(&cliff(e, &nab[k][j]), &phi[k]) / n;
            }
            dphi[k] += e2(i) * nab[k][i];
        }
        for i in 0..2 {
            for j in 0..2 {
                terr = terr.max((0.5 * (c[i][j] + c[j][i]) - 0.5 * a[i][j]).abs());
            }
        }
        let q12 = 0.5 * (c[0][1] - c[1][0]);
        qerr = qerr.max((2.0 * q12 * q12 - 0.5).abs());
        for i in 0..2 {
            yerr = yerr.max((re_dot(&dphi[k], &(e2(i) * phi[k])) / n).abs());
        }
        let expect = phi[k] * Complex64::from(p.mean_curvature(k)) + vol2() * phi[k];
        derr = derr.max((dphi[k] - expect).norm());
    }
    let nab2 = covariant_frame_derivs(&p.domain, &dphi, &zero_form);
    let mut d2err = 0.0f64;
    for k in 0..np {
        let d2 = e2(0) * nab2[k][0] + e2(1) * nab2[k][1];
        let h = p.mean_curvature(k);
        d2err = d2err.max((d2 - phi[k] * Complex64::from(h * h + 1.0)).norm() / phi[k].norm());
    }
    let mut r = Report::new(format!("restriction_{}", p.label));
    r.meta("backend", "patch").meta("ambient", "S3").meta("N", p.domain.n[0]);
    r.residual("killing_restriction", kill, tol)
        .residual("t_half_ii", terr, tol)
        .residual("q_norm_half", qerr, tol)
        .residual("y_zero", yerr, tol)
        .residual("dirac_formula", derr, tol)
        .residual("dsq_eigen", d2err, tol);
    r
}

/// Which ambient space a restriction check runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictionCase {
    S2r,
    S3,
}

/// Runs the restriction checks over every analytic generator of a case.
pub fn restriction_forward_check(case: RestrictionCase, n: usize, tol: f64) -> Result<Vec<Report>> {
    match case {
        RestrictionCase::S2r => [slice(n)?, great_circle_cylinder(n)?, latitude_cylinder(0.8, n)?, tilted_graph(0.1, n)?]
            .iter()
            .map(|d| restriction_check_s2r(d, tol))
            .collect(),
        RestrictionCase::S3 => Ok(vec![
            restriction_check_s3(&clifford_torus_patch([0.2, 0.4], 1.5, n)?, tol),
            restriction_check_s3(&geodesic_sphere_patch(1.0, n)?, tol),
        ]),
    }
}

/// Round unit sphere in ℝ³ on a Gauss-Legendre grid, for the closed CMC
/// identity `H² = πχ/Area + ∫|II|²/(4 Area)`.
pub fn r3_unit_sphere(n_theta: usize) -> ExampleData {
    let grid = crate::sphere::SphereGrid::new(n_theta, 2 * n_theta);
    let samples = grid
        .weights()
        .into_iter()
        .map(|w| SurfaceSample {
            scalar_curvature: 2.0,
            mean_curvature: 1.0,
            ii: [[1.0, 0.0], [0.0, 1.0]],
            f: 0.0,
            weight: w,
        })
        .collect();
    ExampleData { label: "r3_unit_sphere".into(), case: ExampleCase::R3Cmc, samples, euler: Some(2) }
}

/// `∫ f dA / 2π` over a patch; the closed-surface counterpart is an integer.
pub fn flux_number(d: &ImmersionData) -> f64 {
    d.domain.integrate(&d.f) / (2.0 * PI)
}

/// `∫ f dA / 2π` for the closed graph of `h` over the whole of S², by
/// Gauss-Legendre quadrature in `cos θ`.
pub fn closed_graph_flux(n: usize, h: impl Fn(f64, f64) -> HeightJet) -> f64 {
    let grid = crate::sphere::SphereGrid::new(n, 2 * n);
    let dphi = 2.0 * PI / grid.phi.len() as f64;
    let mut total = 0.0;
    for (it, &th) in grid.theta.iter().enumerate() {
        for &ph in &grid.phi {
            let jet = graph_jet(th, h(th, ph));
            let (_, _, f, _) = adapted(&jet, [0.0, 0.0, 1.0]);
            // dθ = d(cos θ)/sin θ
            total += f * jet.metric.det().sqrt() / th.sin() * grid.lat_weights[it] * dphi;
        }
    }
    total / (2.0 * PI)
}

/// Plain-text exchange form of [`ImmersionData`]: row-major samples with
/// `idx = i·M + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionDoc {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    pub g11: Vec<f64>,
    pub g12: Vec<f64>,
    pub g22: Vec<f64>,
    #[serde(rename = "A11")]
    pub a11: Vec<f64>,
    #[serde(rename = "A12")]
    pub a12: Vec<f64>,
    #[serde(rename = "A22")]
    pub a22: Vec<f64>,
    #[serde(rename = "T1")]
    pub t1: Vec<f64>,
    #[serde(rename = "T2")]
    pub t2: Vec<f64>,
    pub f: Vec<f64>,
}

impl ImmersionData {
    pub fn to_doc(&self) -> ImmersionDoc {
        let c = &self.chart;
        ImmersionDoc {
            n: c.n,
            m: c.m,
            a: c.a,
            b: c.b,
            origin: c.origin,
            g11: c.g11.clone(),
            g12: c.g12.clone(),
            g22: c.g22.clone(),
            a11: self.a.iter().map(|x| x[0][0]).collect(),
            a12: self.a.iter().map(|x| x[0][1]).collect(),
            a22: self.a.iter().map(|x| x[1][1]).collect(),
            t1: self.t.iter().map(|x| x[0]).collect(),
            t2: self.t.iter().map(|x| x[1]).collect(),
            f: self.f.clone(),
        }
    }

    /// Rebuilds data from its exchange form; curvature comes from finite
    /// differences of the metric samples.
    pub fn from_doc(label: &str, doc: &ImmersionDoc) -> Result<Self> {
        let np = doc.n * doc.m;
        for (name, v) in [("A11", &doc.a11), ("A12", &doc.a12), ("A22", &doc.a22), ("T1", &doc.t1), ("T2", &doc.t2), ("f", &doc.f)] {
            if v.len() != np {
                return Err(Error::Parse(format!("{name} has {} samples, expected {np}", v.len())));
            }
        }
        let chart = ChartSpec {
            a: doc.a,
            b: doc.b,
            n: doc.n,
            m: doc.m,
            g11: doc.g11.clone(),
            g12: doc.g12.clone(),
            g22: doc.g22.clone(),
            origin: doc.origin,
            jets: None,
        };
        let a = (0..np).map(|k| [[doc.a11[k], doc.a12[k]], [doc.a12[k], doc.a22[k]]]).collect();
        let t = (0..np).map(|k| [doc.t1[k], doc.t2[k]]).collect();
        Self::new(label, chart, a, t, doc.f.clone(), None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic() -> Spinor {
        Spinor::new(Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.7))
    }

    #[test]
    fn spin_lift_covers_the_rotation() {
        let (a, b, c) = (0.3f64, -1.1f64, 2.4f64);
        let rx = [[1.0, 0.0, 0.0], [0.0, a.cos(), -a.sin()], [0.0, a.sin(), a.cos()]];
        let ry = [[b.cos(), 0.0, b.sin()], [0.0, 1.0, 0.0], [-b.sin(), 0.0, b.cos()]];
        let rz = [[c.cos(), -c.sin(), 0.0], [c.sin(), c.cos(), 0.0], [0.0, 0.0, 1.0]];
        let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
            let mut o = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    o[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
                }
            }
            o
        };
        for rot in [rx, mul(rx, ry), mul(mul(rz, ry), rx), mul(rz, rz)] {
            let u = spin_lift(&rot);
            assert!((u * u.adjoint() - CliffMat::identity()).norm() < 1e-14);
            for j in 0..3 {
                let lhs = u * e3(j) * u.adjoint();
                let rhs = e3(0) * Complex64::from(rot[j][0])
                    + e3(1) * Complex64::from(rot[j][1])
                    + e3(2) * Complex64::from(rot[j][2]);
                assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn parallel_spinor_restricts_to_generalized_killing() {
        for d in [slice(33).unwrap(), latitude_cylinder(0.8, 33).unwrap(), tilted_graph(0.1, 33).unwrap()] {
            let r = restriction_check_s2r(&d, 1e-5).unwrap();
            assert!(r.pass, "{}: {:?}", d.label, r.failures());
            for c in ["constraint", "omega12_ambient", "ambient_omega_action"] {
                assert!(r.value(c).unwrap() < 1e-13, "{c}");
            }
        }
    }

    #[test]
    fn theta_vanishes_on_constraint_solutions() {
        let d = tilted_graph(0.3, 9).unwrap();
        for k in 0..d.n_points() {
            let phi = project_constraint(&d, k, generic());
            assert!(constraint_vector(d.t[k], d.f[k], &phi).norm() < 1e-14);
            assert!(norm_sq(&theta(d.t[k], d.f[k], &phi)) < 1e-12);
            let (t, f) = recover_tf(&phi);
            assert!((t[0] - d.t[k][0]).abs() < 1e-12 && (t[1] - d.t[k][1]).abs() < 1e-12 && (f - d.f[k]).abs() < 1e-12);
        }
        // θ is linear in φ with the same kernel, so |θ| tracks the violation
        let k = 7;
        let phi = project_constraint(&d, k, generic());
        for eta in [1e-3, 1e-5] {
            let bad = phi + Spinor::new(Complex64::new(eta, 0.0), ZERO);
            let c = constraint_vector(d.t[k], d.f[k], &bad).norm();
            let th = theta(d.t[k], d.f[k], &bad).norm();
            assert!(c > 0.1 * eta && th > 0.1 * eta && th < 10.0 * eta, "{c} {th}");
        }
    }

    #[test]
    fn slice_propagation_keeps_constraint() {
        let d = slice(33).unwrap();
        let g = integrate_gks(&d, generic()).unwrap();
        assert!(g.warning.is_none());
        assert!(g.max_constraint() < 1e-8, "{}", g.max_constraint());
        assert!(theta_check(&g, &d).iter().all(|t| *t < 1e-12));
        let g = integrate_gks(&great_circle_cylinder(33).unwrap(), generic()).unwrap();
        assert!(g.max_constraint() < 1e-8);
    }

    #[test]
    fn killing_spinor_restricts_to_s3_patches() {
        let t = clifford_torus_patch([0.2, 0.4], 1.5, 41).unwrap();
        assert!(t.a.iter().all(|m| (m[0][0] * m[1][1] + 1.0).abs() < 1e-12 && m[0][1].abs() < 1e-12));
        let s = geodesic_sphere_patch(1.0, 41).unwrap();
        let cot = 1.0f64.cos() / 1.0f64.sin();
        assert!(s.a.iter().all(|m| (m[0][0].abs() - cot).abs() < 1e-12 && (m[1][1] - m[0][0]).abs() < 1e-12));
        for p in [t, s] {
            let r = restriction_check_s3(&p, 1e-5);
            assert!(r.pass, "{}: {:?}", p.label, r.failures());
        }
    }

    #[test]
    fn closed_graphs_carry_integer_flux() {
        let v = closed_graph_flux(24, |th, _| {
            let (s, c) = th.sin_cos();
            [0.3 * c, -0.3 * s, 0.0, -0.3 * c, 0.0, 0.0, 0.3 * s, 0.0, 0.0, 0.0]
        });
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn exchange_form_round_trip() {
        let d = tilted_graph(0.1, 9).unwrap();
        let text = serde_json::to_string(&d.to_doc()).unwrap();
        let back = ImmersionData::from_doc("copy", &serde_json::from_str(&text).unwrap()).unwrap();
        assert!(back.to_doc() == d.to_doc());
        let bad = text.replacen("\"f\"", "\"g\"", 1);
        assert!(serde_json::from_str::<ImmersionDoc>(&bad).is_err());
    }

    #[test]
    fn uniform_weingarten_perturbation_fails() {
        let d = perturb_weingarten(&slice(17).unwrap(), 1e-3);
        let r = daniel_check(&d, 1e-9);
        assert!(!r.pass);
        // fA picks up ε directly while det A only moves by ε²
        assert!((linf(&r, Channel::GradT) - 2f64.sqrt() * 1e-3).abs() < 1e-12);
        assert!((linf(&r, Channel::Gauss) - 1e-6).abs() < 1e-12);
        let g = integrate_gks(&d, generic()).unwrap();
        assert!(g.warning.is_some());
    }

    #[test]
    fn plaquette_defect_is_linear_in_perturbation() {
        let base = tilted_graph(0.2, 17).unwrap();
        let clean = integrate_gks(&base, generic()).unwrap().max_curvature();
        let c: Vec<f64> = [1e-2, 1e-1]
            .iter()
            .map(|&e| integrate_gks(&perturb_weingarten(&base, e), generic()).unwrap().max_curvature() - clean)
            .collect();
        let ratio = c[1] / c[0];
        assert!(ratio > 8.0 && ratio < 12.5, "{c:?}");
    }

    #[test]
    fn example_identities_on_generators() {
        use crate::verify::verify_examples;
        let cases = [
            r3_unit_sphere(16),
            clifford_torus_patch([0.0, 0.0], 2.0 * PI, 33).unwrap().to_example_data(),
            slice(17).unwrap().to_example_data(),
            latitude_cylinder(0.8, 17).unwrap().to_example_data(),
        ];
        for e in &cases {
            let r = verify_examples(e, 1e-9).unwrap();
            assert!(r.pass, "{}: {:?}", e.label, r.failures());
        }
        let r = verify_examples(&cases[0], 1e-9).unwrap();
        assert!((r.value("lhs").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_graph_round_trip() {
        let errs: Vec<f64> = [17, 33]
            .iter()
            .map(|&n| {
                let d = tilted_graph(0.3, n).unwrap();
                let r = equivalence_check(&d, generic(), 1e-3).unwrap();
                assert!(r.pass, "{:?}", r.failures());
                r.value("plaquette").unwrap()
            })
            .collect();
        assert!(errs[1] < errs[0] / 6.0, "{errs:?}");
    }

    fn linf(r: &Report, c: Channel) -> f64 {
        r.value(c.name()).unwrap()
    }

    #[test]
    fn model_surfaces_satisfy_daniel() {
        for d in [slice(17).unwrap(), great_circle_cylinder(17).unwrap(), latitude_cylinder(0.8, 17).unwrap()] {
            let r = daniel_check(&d, 1e-9);
            assert!(r.pass, "{}: {:?}", d.label, r.failures());
        }
        let s = slice(9).unwrap();
        assert!(s.a.iter().all(|m| m.iter().flatten().all(|v| v.abs() < 1e-15)));
        assert!(s.f.iter().all(|f| (f - 1.0).abs() < 1e-15));
        let c = latitude_cylinder(0.8, 9).unwrap();
        // the parallel of colatitude θ₀ has geodesic curvature cot θ₀
        let kg = 0.8f64.cos() / 0.8f64.sin();
        assert!(c.a.iter().all(|m| (m[0][0].abs() - kg).abs() < 1e-14 && m[1][1].abs() < 1e-14));
        assert!(c.f.iter().all(|f| f.abs() < 1e-15) && c.t.iter().all(|t| (t[1].abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn tilted_graph_is_compatible_to_fourth_order() {
        let errs: Vec<f64> = [17, 33]
            .iter()
            .map(|&n| {
                let d = tilted_graph(0.1, n).unwrap();
                assert!(d.constraint_defect() < 1e-12);
                let r = daniel_check(&d, 1.0);
                Channel::ALL.iter().map(|&c| linf(&r, c)).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 1e-6, "{errs:?}");
        assert!((errs[0] / errs[1]).log2() > 3.5, "{errs:?}");
    }

    #[test]
    fn single_channel_defects_are_isolated() {
        for c in Channel::ALL {
            let d = defect_data(c, 1e-3, 17).unwrap();
            let r = daniel_check(&d, 1e-6);
            for o in Channel::ALL {
                let v = linf(&r, o);
                if o == c {
                    assert!(v > 0.5e-3, "{c:?} not detected: {v}");
                } else {
                    assert!(v <= 1e-6, "{c:?} leaks into {o:?}: {v}");
                }
            }
        }
    }
}
