//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use spinc_core::dirac::{assemble_dsq, eigenpairs, Eigenpair};
use spinc_core::domains::{build_sphere_ladder, build_torus2};
use spinc_core::linalg::EigenConfig;
use spinc_core::spinc::make_spinc;
use spinc_core::{Domain, Result, SpincStructure};

/// Square flat torus of side 2π at resolution `n` with a degree-`degree`
/// structure.
pub fn torus(n: usize, degree: i32) -> Result<(Domain, SpincStructure)> {
    let d = build_torus2(2.0 * PI, 2.0 * PI, n)?;
    let s = make_spinc(&d, degree)?;
    Ok((d, s))
}

pub fn sphere(l_max: usize, degree: i32) -> Result<(Domain, SpincStructure)> {
    let d = build_sphere_ladder(l_max)?;
    let s = make_spinc(&d, degree)?;
    Ok((d, s))
}

/// Lowest `k` eigenpairs of `D²`.
pub fn ground_states(d: &Domain, s: &SpincStructure, k: usize) -> Result<Vec<Eigenpair>> {
    eigenpairs(&assemble_dsq(d, s)?, d, k, 0.0, &EigenConfig::default())
}
