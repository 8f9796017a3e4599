//! Verifier reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Reads back the string spellings that [`Report::to_json`] uses for
/// non-finite numbers.
mod lenient {
    use std::collections::BTreeMap;

    use serde::{de::Error, Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }

    fn resolve<E: Error>(n: Num) -> Result<f64, E> {
        match n {
            Num::F(v) => Ok(v),
            Num::S(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(E::custom(format!("expected a number, got {s:?}"))),
            },
        }
    }

    pub fn f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        resolve(Num::deserialize(d)?)
    }

    pub fn f64_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Num>::deserialize(d)?.into_iter().map(|(k, v)| Ok((k, resolve(v)?))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Passes when `|value| ≤ tol`.
    Residual,
    /// Passes when `value ≥ −tol`.
    Slack,
    /// Passes when `value ≥ tol` (strict inequality with margin).
    Positive,
    /// Reported, never affects the verdict.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    #[serde(deserialize_with = "lenient::f64")]
    pub value: f64,
    #[serde(deserialize_with = "lenient::f64")]
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    #[serde(deserialize_with = "lenient::f64")]
    pub l2: f64,
    #[serde(deserialize_with = "lenient::f64")]
    pub linf: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    /// `lhs`, `rhs`, `slack` and other named scalars.
    #[serde(deserialize_with = "lenient::f64_map")]
    pub scalars: BTreeMap<String, f64>,
    pub norms: BTreeMap<String, Norms>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pass: true, ..Default::default() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn scalar(&mut self, key: &str, value: f64) -> &mut Self {
        self.scalars.insert(key.to_string(), value);
        self
    }

    pub fn norm(&mut self, key: &str, l2: f64, linf: f64) -> &mut Self {
        self.norms.insert(key.to_string(), Norms { l2, linf });
        self
    }

    pub fn check(&mut self, name: &str, kind: CheckKind, value: f64, tol: f64) -> &mut Self {
        let pass = match kind {
            CheckKind::Residual => value.abs() <= tol,
            CheckKind::Slack => value >= -tol,
            CheckKind::Positive => value >= tol,
            CheckKind::Info => true,
        };
        self.pass &= pass;
        self.checks.push(Check { name: name.to_string(), kind, value, tol, pass });
        self
    }

    pub fn residual(&mut self, name: &str, value: f64, tol: f64) -> &mut Self {
        self.check(name, CheckKind::Residual, value, tol)
    }

    pub fn slack(&mut self, name: &str, value: f64, tol: f64) -> &mut Self {
        self.check(name, CheckKind::Slack, value, tol)
    }

    pub fn info(&mut self, name: &str, value: f64) -> &mut Self {
        self.check(name, CheckKind::Info, value, 0.0)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Value of a scalar or check, whichever carries the name.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied().or_else(|| self.get(name).map(|c| c.value))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Stable JSON rendering (sorted maps, non-finite values as strings).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&crate::io::finite_json(serde_json::to_value(self).expect("report serializes")))
            .expect("json")
    }
}

/// Aggregate table across reports: one row per check.
pub fn aggregate_csv(reports: &[Report]) -> String {
    let mut out = String::from("report,backend,N,degree,level,check,kind,value,tol,pass\n");
    for r in reports {
        let m = |k: &str| r.metadata.get(k).cloned().unwrap_or_default();
        for c in &r.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.16e},{:.3e},{}\n",
                r.name,
                m("backend"),
                m("N"),
                m("degree"),
                m("level"),
                c.name,
                serde_json::to_value(c.kind).unwrap().as_str().unwrap(),
                c.value,
                c.tol,
                c.pass
            ));
        }
    }
    out
}
