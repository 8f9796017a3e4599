//! Experiment configuration documents.

use std::path::PathBuf;

use serde::Deserialize;
use spinc_core::verify::Tolerances;

pub const MAX_K: usize = 200;
pub const LATTICE_N: (usize, usize) = (5, 256);
pub const SPHERE_L_MAX: (usize, usize) = (2, 64);

#[derive(Debug, thiserror::Error)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Sphere,
    Torus2,
    Torus3,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Sphere => "sphere",
            Backend::Torus2 => "torus2",
            Backend::Torus3 => "torus3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    /// `D²`, spectrum `λ²`.
    Dsq,
    /// `D` itself (sphere only), signed spectrum `λ`.
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verifier {
    Thm31,
    Rem32,
    DetBound,
    BarBound,
    FkSpin,
    Thm41,
}

impl Verifier {
    /// Verifiers that need the `D`-eigenvalue rather than `λ²`.
    pub fn needs_lambda(self) -> bool {
        matches!(self, Verifier::Rem32 | Verifier::DetBound | Verifier::FkSpin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Slice,
    GreatCircleCylinder,
    LatitudeCylinder,
    TiltedGraph,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Slice => "slice",
            Generator::GreatCircleCylinder => "great_circle_cylinder",
            Generator::LatitudeCylinder => "latitude_cylinder",
            Generator::TiltedGraph => "tilted_graph",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub spectral: Option<f64>,
    pub lattice_c: Option<f64>,
    pub equality_factor: Option<f64>,
    /// Absolute tolerance for every verifier, overriding the per-backend rule.
    pub tol: Option<f64>,
    /// When set, the ground state of each sweep point must attain equality in
    /// the 3-D eigenvalue bound to this relative accuracy.
    pub thm41_equality: Option<f64>,
    /// Smallest accepted convergence order between consecutive resolutions.
    pub min_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImmersionConfig {
    #[serde(default = "default_immersion_n")]
    pub n: usize,
    #[serde(default = "default_generators")]
    pub generators: Vec<Generator>,
    #[serde(default = "default_daniel_tol")]
    pub daniel_tol: f64,
    /// Amplitude of the single-channel defects; `None` skips them.
    #[serde(default)]
    pub defect_eps: Option<f64>,
    #[serde(default = "yes")]
    pub gks: bool,
    #[serde(default = "yes")]
    pub examples: bool,
    #[serde(default)]
    pub restriction: bool,
}

fn default_immersion_n() -> usize {
    17
}

fn default_generators() -> Vec<Generator> {
    vec![Generator::Slice, Generator::GreatCircleCylinder, Generator::LatitudeCylinder]
}

fn default_daniel_tol() -> f64 {
    1e-9
}

fn yes() -> bool {
    true
}

impl Default for ImmersionConfig {
    fn default() -> Self {
        Self {
            n: default_immersion_n(),
            generators: default_generators(),
            daniel_tol: default_daniel_tol(),
            defect_eps: Some(1e-3),
            gks: true,
            examples: true,
            restriction: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub backend: Option<Backend>,
    /// Lattice points per axis (tori).
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    /// Side lengths (tori); defaults to 2π on every axis.
    #[serde(rename = "L", default)]
    pub lengths: Option<Vec<f64>>,
    #[serde(default)]
    pub l_max: Option<usize>,
    #[serde(default)]
    pub degrees: Vec<i32>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "default_operator")]
    pub operator: Operator,
    #[serde(default)]
    pub verifiers: Vec<Verifier>,
    /// Extra lattice resolutions for the identity convergence study.
    #[serde(default)]
    pub convergence: Vec<usize>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub immersion: Option<ImmersionConfig>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_operator() -> Operator {
    Operator::Dsq
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        let o = &self.tolerances;
        Tolerances {
            spectral: o.spectral.unwrap_or(d.spectral),
            lattice_c: o.lattice_c.unwrap_or(d.lattice_c),
            equality_factor: o.equality_factor.unwrap_or(d.equality_factor),
        }
    }

    /// The sweep backend; only meaningful after [`Self::require_sweep`].
    pub fn backend(&self) -> Backend {
        self.backend.expect("validated sweep config")
    }

    pub fn k(&self) -> usize {
        self.k.expect("validated sweep config")
    }

    /// Checks that the document describes an eigenpair sweep.
    pub fn require_sweep(&self) -> Result<(), ConfigError> {
        if self.backend.is_none() {
            return Err(bad("missing backend (sphere, torus2 or torus3)"));
        }
        Ok(())
    }

    pub fn lengths(&self) -> Vec<f64> {
        let dim = if self.backend == Some(Backend::Torus3) { 3 } else { 2 };
        self.lengths.clone().unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; dim])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.backend {
            Some(b) => self.validate_sweep(b)?,
            None => {
                if self.immersion.is_none() {
                    return Err(bad("missing backend (sphere, torus2 or torus3)"));
                }
                if self.n.is_some() || self.l_max.is_some() || !self.degrees.is_empty() || self.k.is_some() {
                    return Err(bad("sweep parameters given without a backend"));
                }
                if !self.verifiers.is_empty() || !self.convergence.is_empty() {
                    return Err(bad("verifiers given without a backend"));
                }
            }
        }
        let o = &self.tolerances;
        for (name, v) in [
            ("spectral", o.spectral),
            ("lattice_c", o.lattice_c),
            ("equality_factor", o.equality_factor),
            ("tol", o.tol),
            ("thm41_equality", o.thm41_equality),
            ("min_order", o.min_order),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(format!("tolerance {name} must be positive")));
                }
            }
        }
        if let Some(im) = &self.immersion {
            if !(9..=129).contains(&im.n) || im.n % 2 == 0 {
                return Err(bad(format!("immersion n = {} must be odd and within [9, 129]", im.n)));
            }
            if !(im.daniel_tol.is_finite() && im.daniel_tol > 0.0) {
                return Err(bad("daniel_tol must be positive"));
            }
            if im.defect_eps.is_some_and(|e| !(e.is_finite() && e > 0.0)) {
                return Err(bad("defect_eps must be positive"));
            }
        }
        Ok(())
    }

    fn validate_sweep(&self, backend: Backend) -> Result<(), ConfigError> {
        let in_range = |v: usize, (lo, hi): (usize, usize), what: &str| {
            if v < lo || v > hi {
                Err(bad(format!("{what} = {v} outside [{lo}, {hi}]")))
            } else {
                Ok(())
            }
        };
        match backend {
            Backend::Sphere => {
                let l = self.l_max.ok_or_else(|| bad("the sphere backend needs l_max"))?;
                in_range(l, SPHERE_L_MAX, "l_max")?;
                if self.n.is_some() || self.lengths.is_some() {
                    return Err(bad("N and L apply to lattice backends only"));
                }
                if let Some(d) = self.degrees.iter().find(|d| *d % 2 != 0) {
                    return Err(bad(format!("sphere degree {d} is odd; Spin^c structures on S² need even degree")));
                }
                if !self.convergence.is_empty() {
                    return Err(bad("convergence studies apply to lattice backends only"));
                }
            }
            Backend::Torus2 | Backend::Torus3 => {
                let n = self.n.ok_or_else(|| bad(format!("the {} backend needs N", backend.name())))?;
                in_range(n, LATTICE_N, "N")?;
                for &m in &self.convergence {
                    in_range(m, LATTICE_N, "convergence N")?;
                }
                if self.l_max.is_some() {
                    return Err(bad("l_max applies to the sphere backend only"));
                }
                if self.operator == Operator::D {
                    return Err(bad("operator = \"d\" is available on the sphere backend only"));
                }
                let dim = if backend == Backend::Torus3 { 3 } else { 2 };
                let l = self.lengths();
                if l.len() != dim || l.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(bad(format!("L must hold {dim} positive side lengths")));
                }
            }
        }
        if self.degrees.is_empty() {
            return Err(bad("degrees must not be empty"));
        }
        in_range(self.k.ok_or_else(|| bad("missing k"))?, (1, MAX_K), "k")?;
        if !self.shift.is_finite() {
            return Err(bad("shift must be finite"));
        }
        let surface = backend != Backend::Torus3;
        for v in &self.verifiers {
            let ok = match v {
                Verifier::Thm41 => !surface,
                Verifier::FkSpin => surface && self.degrees.iter().all(|&d| d == 0),
                _ => surface,
            };
            if !ok {
                return Err(bad(format!("verifier {v:?} does not apply to backend {} with degrees {:?}", backend.name(), self.degrees)));
            }
        }
        if self.tolerances.thm41_equality.is_some() && !self.verifiers.contains(&Verifier::Thm41) {
            return Err(bad("thm41_equality needs the thm41 verifier"));
        }
        if self.tolerances.min_order.is_some() && self.convergence.is_empty() {
            return Err(bad("min_order needs a convergence list"));
        }
        if !self.convergence.is_empty() && !self.verifiers.contains(&Verifier::Thm31) {
            return Err(bad("convergence studies need the thm31 verifier"));
        }
        Ok(())
    }
}

/// Named configurations shipped with the binary.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "canonical-sphere" => CANONICAL_SPHERE,
        "spin-sphere" => SPIN_SPHERE,
        "torus-sweep" => TORUS_SWEEP,
        "torus-convergence" => TORUS_CONVERGENCE,
        "torus3" => TORUS3,
        "immersion" => IMMERSION,
        _ => return None,
    })
}

pub const PRESETS: [&str; 6] =
    ["canonical-sphere", "spin-sphere", "torus-sweep", "torus-convergence", "torus3", "immersion"];

const CANONICAL_SPHERE: &str = r#"
name = "canonical_sphere"
backend = "sphere"
l_max = 16
degrees = [2]
k = 1
verifiers = ["thm31", "rem32", "det_bound", "bar_bound"]
[tolerances]
tol = 1e-10
"#;

const SPIN_SPHERE: &str = r#"
name = "spin_sphere"
backend = "sphere"
l_max = 8
degrees = [0]
k = 2
shift = 1.0
operator = "d"
verifiers = ["thm31", "rem32", "bar_bound", "fk_spin"]
[tolerances]
tol = 1e-9
"#;

const TORUS_SWEEP: &str = r#"
name = "torus_sweep"
backend = "torus2"
N = 32
degrees = [-3, -2, -1, 0, 1, 2, 3]
k = 10
verifiers = ["bar_bound"]
"#;

const TORUS_CONVERGENCE: &str = r#"
name = "torus_convergence"
backend = "torus2"
N = 64
degrees = [1]
k = 6
verifiers = ["thm31"]
convergence = [32]
[tolerances]
min_order = 1.8
"#;

const TORUS3: &str = r#"
name = "torus3"
backend = "torus3"
N = 24
degrees = [1]
k = 6
verifiers = ["thm41"]
[tolerances]
thm41_equality = 1e-5
"#;

const IMMERSION: &str = r#"
name = "immersion"
[immersion]
n = 17
generators = ["slice", "great_circle_cylinder", "latitude_cylinder"]
defect_eps = 1e-3
gks = true
examples = true
restriction = true
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for p in PRESETS {
            ExperimentConfig::from_toml(preset(p).unwrap()).unwrap_or_else(|e| panic!("{p}: {e}"));
        }
    }

    #[test]
    fn immersion_only_document() {
        let c = ExperimentConfig::from_toml("[immersion]\nn = 9\n").unwrap();
        assert!(c.require_sweep().is_err());
        assert!(ExperimentConfig::from_toml("[immersion]\nn = 10\n").is_err());
        assert!(ExperimentConfig::from_toml("k = 3\n[immersion]\n").is_err());
    }

    #[test]
    fn missing_n_is_rejected() {
        let e = ExperimentConfig::from_toml("backend = \"torus2\"\ndegrees = [1]\nk = 3\n").unwrap_err();
        assert!(e.0.contains("needs N"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("backend = \"torus2\"\nN = 8\ndegrees = [1]\nk = 3\ncolour = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("backend = \"torus2\"\nN = 8\ndegrees = [1]\nk = 3\n[tolerances]\nfoo = 1.0\n")
            .is_err());
    }

    #[test]
    fn unknown_verifier_is_rejected() {
        let t = "backend = \"torus2\"\nN = 8\ndegrees = [1]\nk = 3\nverifiers = [\"thm99\"]\n";
        assert!(ExperimentConfig::from_toml(t).is_err());
    }

    #[test]
    fn inapplicable_verifier_is_rejected() {
        let t = "backend = \"torus2\"\nN = 8\ndegrees = [1]\nk = 3\nverifiers = [\"thm41\"]\n";
        assert!(ExperimentConfig::from_toml(t).is_err());
        let t = "backend = \"sphere\"\nl_max = 8\ndegrees = [1]\nk = 3\n";
        assert!(ExperimentConfig::from_toml(t).is_err());
    }
}
