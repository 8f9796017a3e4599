//! Sweep execution and output assembly.
//!
//! Every sweep point is computed in the work pool; the outputs are assembled
//! in configuration order and only then written, so a failing computation
//! leaves nothing half-written behind.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spinc_core::clifford::Spinor;
use spinc_core::dirac::{assemble_d_sphere, assemble_dsq, eigenpairs, Eigenpair};
use spinc_core::domains::{build_sphere_ladder, build_torus2, build_torus3};
use spinc_core::immersion::{self, Channel, RestrictionCase};
use spinc_core::linalg::EigenConfig;
use spinc_core::report::{aggregate_csv, CheckKind};
use spinc_core::spinc::make_spinc;
use spinc_core::verify::{self, convergence_order};
use spinc_core::{Complex64, Domain, Report, SpincStructure};

use crate::config::{Backend, ExperimentConfig, Generator, Operator, Verifier};
use crate::plot;

pub const DEFAULT_SEED: u64 = 0x5eed;

/// Files of one run, relative to the output directory, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    pub reports: Vec<Report>,
    pub files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    fn add(&mut self, path: impl Into<PathBuf>, body: String) {
        self.files.push((path.into(), body));
    }

    fn add_reports(&mut self, reports: Vec<Report>) {
        for (i, r) in reports.iter().enumerate() {
            let tag = r.metadata.get("degree").map(|d| format!("_d{d}")).unwrap_or_default();
            self.add(format!("reports/{i:04}_{}{tag}.json", r.name), r.to_json() + "\n");
        }
        self.reports = reports;
    }

    fn add_aggregate_and_plots(&mut self) {
        if self.reports.is_empty() {
            log::warn!("no reports; aggregate table and plots skipped");
            return;
        }
        self.add("aggregate.csv", aggregate_csv(&self.reports));
        for (name, svg) in plot::plots(&self.reports) {
            self.add(format!("plots/{name}"), svg);
        }
    }

    /// Writes every file under `dir`, creating directories as needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (rel, body) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

/// Resolved run parameters: the config plus command-line overrides.
#[derive(Debug, Clone)]
pub struct RunParams {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl RunParams {
    pub fn new(config: ExperimentConfig, seed: Option<u64>, tol: Option<f64>) -> Self {
        let seed = seed.or(config.seed).unwrap_or(DEFAULT_SEED);
        let tol = tol.or(config.tolerances.tol);
        Self { config, seed, tol }
    }

    fn eigen_config(&self) -> EigenConfig {
        EigenConfig { seed: self.seed, ..EigenConfig::default() }
    }

    fn tol_for(&self, d: &Domain) -> f64 {
        self.tol.unwrap_or_else(|| self.config.tolerances().for_domain(d))
    }
}

fn build_domain(cfg: &ExperimentConfig, n: Option<usize>) -> Result<Domain> {
    let l = cfg.lengths();
    Ok(match cfg.backend() {
        Backend::Sphere => build_sphere_ladder(cfg.l_max.expect("validated"))?,
        Backend::Torus2 => build_torus2(l[0], l[1], n.or(cfg.n).expect("validated"))?,
        Backend::Torus3 => build_torus3([l[0], l[1], l[2]], n.or(cfg.n).expect("validated"))?,
    })
}

/// One eigenpair with its `D`-eigenvalue when that is determined: always for
/// the first-order operator, and for kernel states of `D²`.
struct Level {
    lambda_sq: f64,
    lambda: Option<f64>,
    pair: Eigenpair,
}

fn kernel_threshold(d: &Domain, s: &SpincStructure, spectral: f64) -> f64 {
    if d.l_max.is_some() {
        return spectral;
    }
    1e-3 * (2.0 * PI * s.degree.unsigned_abs().max(1) as f64 / d.area())
}

fn solve(p: &RunParams, d: &Domain, s: &SpincStructure) -> Result<Vec<Level>> {
    let cfg = &p.config;
    let op = match cfg.operator {
        Operator::Dsq => assemble_dsq(d, s)?,
        Operator::D => assemble_d_sphere(d, s)?,
    };
    let pairs = eigenpairs(&op, d, cfg.k(), cfg.shift, &p.eigen_config())?;
    let thr = kernel_threshold(d, s, cfg.tolerances().spectral);
    Ok(pairs
        .into_iter()
        .map(|pair| match cfg.operator {
            Operator::D => Level { lambda_sq: pair.value * pair.value, lambda: Some(pair.value), pair },
            Operator::Dsq => Level { lambda_sq: pair.value, lambda: (pair.value.abs() < thr).then_some(0.0), pair },
        })
        .collect())
}

fn describe(r: &mut Report, d: &Domain, s: &SpincStructure, level: usize) {
    r.meta("backend", d.kind.name()).meta("degree", s.degree).meta("level", level);
    match d.l_max {
        Some(l) => r.meta("N", format!("lmax{l}")),
        None => r.meta("N", d.n[0]),
    };
}

struct Point {
    reports: Vec<Report>,
    spectrum_rows: Vec<String>,
}

fn run_point(p: &RunParams, degree: i32, n: Option<usize>, main: bool) -> Result<Point> {
    let cfg = &p.config;
    let d = build_domain(cfg, n)?;
    let s = make_spinc(&d, degree)?;
    let levels = solve(p, &d, &s)?;
    let tol = p.tol_for(&d);
    let tols = cfg.tolerances();
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let fmt_opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.16e}"));
    for (i, lv) in levels.iter().enumerate() {
        if main {
            let mut r = Report::new("eigenpair");
            describe(&mut r, &d, &s, i);
            r.scalar("lambda_sq", lv.lambda_sq).info("eigen_residual", lv.pair.residual);
            if let Some(l) = lv.lambda {
                r.scalar("lambda", l);
            }
            reports.push(r);
            rows.push(format!(
                "{degree},{i},{:.16e},{},{:.16e}",
                lv.lambda_sq,
                fmt_opt(lv.lambda),
                lv.pair.residual
            ));
        }
        for v in &cfg.verifiers {
            if !main && *v != Verifier::Thm31 {
                continue;
            }
            let psi = &lv.pair.spinor;
            let mut r = match v {
                Verifier::Thm31 => verify::verify_thm31(&d, &s, psi, lv.lambda_sq, tol)?,
                Verifier::Thm41 => {
                    let mut r = verify::verify_thm41(&d, &s, psi, lv.lambda_sq, tol)?;
                    if let (0, Some(eq)) = (i, cfg.tolerances.thm41_equality) {
                        verify::thm41_equality_checks(&mut r, eq);
                    } else if i > 0 {
                        // positive beyond the eigensolver accuracy
                        let slack = r.value("slack").unwrap_or(f64::NAN);
                        r.check("strict_slack", CheckKind::Positive, slack, tols.spectral);
                    }
                    r
                }
                Verifier::BarBound => continue,
                _ => match lv.lambda {
                    Some(l) => match v {
                        Verifier::Rem32 => verify::verify_rem32(&d, &s, psi, l, tol)?,
                        Verifier::DetBound => verify::verify_det_bound(&d, &s, psi, l, tol)?,
                        Verifier::FkSpin => verify::verify_fk_spin(&d, &s, psi, l, tol)?,
                        _ => unreachable!(),
                    },
                    None => continue,
                },
            };
            describe(&mut r, &d, &s, i);
            reports.push(r);
        }
    }
    if main && cfg.verifiers.contains(&Verifier::BarBound) {
        let (i, lv) = levels
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.lambda_sq.total_cmp(&b.1.lambda_sq))
            .expect("k >= 1");
        let lam = lv.lambda.unwrap_or(lv.lambda_sq.max(0.0).sqrt());
        let mut r = verify::verify_bar_bound(&d, &s, lv.lambda_sq, &lv.pair.spinor, lam, tol, tols.equality_factor)?;
        describe(&mut r, &d, &s, i);
        reports.push(r);
    }
    Ok(Point { reports, spectrum_rows: rows })
}

/// Observed convergence orders of the energy-momentum identity between
/// consecutive resolutions, using the largest residual over the levels.
fn convergence_reports(p: &RunParams, reports: &[Report]) -> Vec<Report> {
    let mut worst: BTreeMap<(i32, usize), f64> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.name == "thm31") {
        let key = (r.metadata["degree"].parse().unwrap_or(0), r.metadata["N"].parse().unwrap_or(0));
        let e = worst.entry(key).or_insert(0.0);
        *e = e.max(r.value("residual_l2").unwrap_or(f64::NAN));
    }
    let mut out = Vec::new();
    for &degree in &p.config.degrees {
        let series: Vec<(usize, f64)> = worst.iter().filter(|(k, _)| k.0 == degree).map(|(k, v)| (k.1, *v)).collect();
        for w in series.windows(2) {
            let ((n0, e0), (n1, e1)) = (w[0], w[1]);
            let order = convergence_order(e0, e1, n1 as f64 / n0 as f64);
            let mut r = Report::new("convergence");
            r.meta("backend", p.config.backend().name())
                .meta("degree", degree)
                .meta("N", format!("{n0}-{n1}"))
                .scalar("coarse", e0)
                .scalar("fine", e1);
            match p.config.tolerances.min_order {
                Some(m) => r.check("order", CheckKind::Positive, order, m),
                None => r.info("order", order),
            };
            out.push(r);
        }
    }
    out
}

/// Eigenpairs and selected verifiers over the degree sweep (plus the
/// convergence resolutions).
pub fn verify(p: &RunParams, with_verifiers: bool) -> Result<Outputs> {
    let cfg = &p.config;
    let mut p = p.clone();
    if !with_verifiers {
        p.config.verifiers.clear();
    }
    let mut jobs: Vec<(i32, Option<usize>, bool)> = cfg.degrees.iter().map(|&d| (d, None, true)).collect();
    if with_verifiers {
        for &n in &cfg.convergence {
            jobs.extend(cfg.degrees.iter().map(|&d| (d, Some(n), false)));
        }
    }
    let points: Vec<Point> = jobs
        .par_iter()
        .map(|&(d, n, main)| run_point(&p, d, n, main).with_context(|| format!("degree {d}")))
        .collect::<Result<_>>()?;
    let mut reports: Vec<Report> = Vec::new();
    let mut spectrum = String::from("degree,index,lambda_sq,lambda,residual\n");
    for pt in &points {
        reports.extend(pt.reports.iter().cloned());
        for row in &pt.spectrum_rows {
            spectrum.push_str(row);
            spectrum.push('\n');
        }
    }
    if !cfg.convergence.is_empty() && with_verifiers {
        reports.extend(convergence_reports(&p, &reports));
    }
    let mut out = Outputs::default();
    out.add("spectrum.csv", spectrum);
    out.add_reports(reports);
    out.add_aggregate_and_plots();
    Ok(out)
}

fn base_spinor(seed: u64) -> Spinor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    Spinor::new(c(), c())
}

fn generate(g: Generator, n: usize) -> spinc_core::Result<spinc_core::ImmersionData> {
    match g {
        Generator::Slice => immersion::slice(n),
        Generator::GreatCircleCylinder => immersion::great_circle_cylinder(n),
        Generator::LatitudeCylinder => immersion::latitude_cylinder(0.8, n),
        Generator::TiltedGraph => immersion::tilted_graph(0.1, n),
    }
}

const GKS_CONSTRAINT_TOL: f64 = 1e-8;
const THETA_TOL: f64 = 1e-12;
const DEFECT_LEAK_TOL: f64 = 1e-6;
const RESTRICTION_TOL: f64 = 1e-5;
const EXAMPLE_TOL: f64 = 1e-9;

enum ImmersionJob {
    Surface(Generator),
    Defect(Channel, f64),
    Examples,
    Restriction(RestrictionCase),
}

fn run_immersion_job(p: &RunParams, job: &ImmersionJob) -> Result<Vec<Report>> {
    let im = p.config.immersion.clone().unwrap_or_default();
    let n = im.n;
    let tag = |mut r: Report, surface: &str| {
        r.meta("surface", surface);
        r
    };
    Ok(match job {
        ImmersionJob::Surface(g) => {
            let d = generate(*g, n)?;
            let mut out = vec![tag(immersion::daniel_check(&d, p.tol.unwrap_or(im.daniel_tol)), g.name())];
            if im.gks {
                let field = immersion::integrate_gks(&d, base_spinor(p.seed))?;
                let theta = immersion::theta_check(&field, &d).into_iter().fold(0.0, f64::max);
                let mut r = Report::new(format!("gks_{}", g.name()));
                r.residual("constraint", field.max_constraint(), GKS_CONSTRAINT_TOL)
                    .residual("theta_sq", theta, THETA_TOL)
                    .info("curvature", field.max_curvature());
                if let Some(w) = &field.warning {
                    r.meta("warning", w);
                }
                out.push(tag(r, g.name()));
            }
            out
        }
        ImmersionJob::Defect(c, eps) => {
            let d = immersion::defect_data(*c, *eps, n)?;
            let daniel = immersion::daniel_check(&d, DEFECT_LEAK_TOL);
            let mut r = Report::new(format!("defect_{}", c.name()));
            for o in Channel::ALL {
                let v = daniel.value(o.name()).unwrap_or(f64::NAN);
                if o == *c {
                    r.check(&format!("detected_{}", o.name()), CheckKind::Positive, v, 0.5 * eps);
                } else {
                    r.residual(&format!("leak_{}", o.name()), v, DEFECT_LEAK_TOL);
                }
            }
            vec![tag(r, c.name())]
        }
        ImmersionJob::Examples => {
            let cases = [
                immersion::r3_unit_sphere(16),
                immersion::clifford_torus_patch([0.0, 0.0], 2.0 * PI, 33)?.to_example_data(),
                immersion::slice(n)?.to_example_data(),
                immersion::latitude_cylinder(0.8, n)?.to_example_data(),
            ];
            cases
                .iter()
                .map(|e| Ok(tag(verify::verify_examples(e, EXAMPLE_TOL)?, &e.label)))
                .collect::<Result<_>>()?
        }
        ImmersionJob::Restriction(case) => {
            let (name, n) = match case {
                RestrictionCase::S2r => ("s2r", 33),
                RestrictionCase::S3 => ("s3", 41),
            };
            immersion::restriction_forward_check(*case, n, RESTRICTION_TOL)?
                .into_iter()
                .enumerate()
                .map(|(i, r)| tag(r, &format!("{name}_{i}")))
                .collect()
        }
    })
}

/// Immersion suite: compatibility checks, defects, GKS propagation, example
/// identities and the restriction checks.
pub fn immerse(p: &RunParams) -> Result<Outputs> {
    let im = p.config.immersion.clone().unwrap_or_default();
    let mut jobs: Vec<ImmersionJob> = im.generators.iter().map(|&g| ImmersionJob::Surface(g)).collect();
    if let Some(eps) = im.defect_eps {
        jobs.extend(Channel::ALL.iter().map(|&c| ImmersionJob::Defect(c, eps)));
    }
    if im.examples {
        jobs.push(ImmersionJob::Examples);
    }
    if im.restriction {
        jobs.push(ImmersionJob::Restriction(RestrictionCase::S2r));
        jobs.push(ImmersionJob::Restriction(RestrictionCase::S3));
    }
    let reports: Vec<Vec<Report>> = jobs.par_iter().map(|j| run_immersion_job(p, j)).collect::<Result<_>>()?;
    let mut out = Outputs::default();
    out.add_reports(reports.into_iter().flatten().collect());
    out.add_aggregate_and_plots();
    Ok(out)
}

/// Re-reads the JSON reports under `dir/reports` (sorted by file name).
pub fn load_reports(dir: &Path) -> Result<Vec<Report>> {
    let rdir = dir.join("reports");
    if !rdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&rdir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .iter()
        .map(|p| spinc_core::io::read_json(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

/// Aggregate table and plots regenerated from stored reports.
pub fn report(dir: &Path) -> Result<Outputs> {
    let mut out = Outputs { reports: load_reports(dir)?, files: Vec::new() };
    out.add_aggregate_and_plots();
    Ok(out)
}
