//! JSON run configuration.
//!
//! ```json
//! {
//!   "domain": {"a": 0, "b": 1},
//!   "n_points": 257, "T": 0.01, "n_steps": 100,
//!   "epsilon": 0.05, "lambda": 0.1, "scheme": "s1",
//!   "y0": "cos(2*pi*x)", "target": "cos(2*pi*x)",
//!   "adjoint_variant": "n",
//!   "newton": {"tol": 1e-10, "max_iters": 25},
//!   "sweep": {"tol": 1e-9, "max_sweeps": 200, "relaxation": 1.0},
//!   "output_dir": "out/fig3"
//! }
//! ```
//!
//! A 2D problem is selected by giving `a2`/`b2` in `domain`; `n_points_y`
//! defaults to `n_points`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse;
use crate::grid::{SpaceGrid, TimeGrid};
use crate::ocp::{ProblemSpec, SweepConfig};
use crate::schemes::{AdjointVariant, NewtonConfig, SchemeKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points_y: Option<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_steps: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub scheme: String,
    pub y0: String,
    pub target: String,
    #[serde(default = "default_variant")]
    pub adjoint_variant: String,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn default_variant() -> String {
    "n".to_owned()
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_owned(),
        message: message.into(),
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if finite(key, v)? > 0.0 {
        Ok(v)
    } else {
        Err(config_err(key, format!("must be > 0, got {v}")))
    }
}

impl RunConfig {
    /// Parses JSON; syntax and schema errors carry line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            // serde names the offending key in backticks for unknown/missing fields
            let key = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("<document>")
                .to_owned();
            Error::Config { key, message: msg }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind> {
        SchemeKind::from_name(&self.scheme).ok_or_else(|| {
            config_err(
                "scheme",
                format!("unknown scheme `{}` (allowed: s1, s2, s3)", self.scheme),
            )
        })
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.output_dir.as_ref().map(PathBuf::from)
    }

    pub fn is_2d(&self) -> bool {
        self.domain.a2.is_some() || self.domain.b2.is_some()
    }

    /// Validates every field and builds the solver inputs.
    pub fn to_problem(&self) -> Result<(ProblemSpec<f64>, SweepConfig<f64>)> {
        let a = finite("domain.a", self.domain.a)?;
        let b = finite("domain.b", self.domain.b)?;
        if b <= a {
            return Err(config_err(
                "domain.b",
                format!("must exceed domain.a ({a}), got {b}"),
            ));
        }
        if self.n_points < 4 {
            return Err(config_err(
                "n_points",
                format!("must be at least 4, got {}", self.n_points),
            ));
        }
        let grid = if self.is_2d() {
            let a2 = finite(
                "domain.a2",
                self.domain
                    .a2
                    .ok_or_else(|| config_err("domain.a2", "required with domain.b2"))?,
            )?;
            let b2 = finite(
                "domain.b2",
                self.domain
                    .b2
                    .ok_or_else(|| config_err("domain.b2", "required with domain.a2"))?,
            )?;
            if b2 <= a2 {
                return Err(config_err(
                    "domain.b2",
                    format!("must exceed domain.a2 ({a2}), got {b2}"),
                ));
            }
            let ny = self.n_points_y.unwrap_or(self.n_points);
            if ny < 4 {
                return Err(config_err(
                    "n_points_y",
                    format!("must be at least 4, got {ny}"),
                ));
            }
            SpaceGrid::new_2d((a, b, self.n_points), (a2, b2, ny))
                .map_err(|e| config_err("domain", e.to_string()))?
        } else {
            if self.n_points_y.is_some() {
                return Err(config_err(
                    "n_points_y",
                    "only valid for 2D domains (set domain.a2/b2)",
                ));
            }
            SpaceGrid::new_1d(a, b, self.n_points)
                .map_err(|e| config_err("domain", e.to_string()))?
        };
        let t_final = positive("T", self.t_final)?;
        if self.n_steps == 0 {
            return Err(config_err("n_steps", "must be at least 1"));
        }
        let time =
            TimeGrid::new(t_final, self.n_steps).map_err(|e| config_err("T", e.to_string()))?;
        let eps = positive("epsilon", self.epsilon)?;
        let lambda = positive("lambda", self.lambda)?;
        let scheme = self.scheme_kind()?;
        let y0 = parse(&self.y0).map_err(|e| config_err("y0", e.to_string()))?;
        let target = parse(&self.target).map_err(|e| config_err("target", e.to_string()))?;
        let adjoint_variant = match self.adjoint_variant.as_str() {
            "n" => AdjointVariant::CoeffAtN,
            "n1" => AdjointVariant::CoeffAtN1,
            other => {
                return Err(config_err(
                    "adjoint_variant",
                    format!("unknown variant `{other}` (allowed: n, n1)"),
                ))
            }
        };
        let mut newton = NewtonConfig::default();
        if let Some(tol) = self.newton.tol {
            newton.residual_tol = positive("newton.tol", tol)?;
        }
        if let Some(it) = self.newton.max_iters {
            if it == 0 {
                return Err(config_err("newton.max_iters", "must be at least 1"));
            }
            newton.max_iters = it;
        }
        let mut sweep = SweepConfig::default();
        if let Some(tol) = self.sweep.tol {
            sweep.fp_tol = positive("sweep.tol", tol)?;
        }
        if let Some(n) = self.sweep.max_sweeps {
            if n == 0 {
                return Err(config_err("sweep.max_sweeps", "must be at least 1"));
            }
            sweep.max_sweeps = n;
        }
        if let Some(theta) = self.sweep.relaxation {
            if !(finite("sweep.relaxation", theta)? > 0.0 && theta <= 1.0) {
                return Err(config_err(
                    "sweep.relaxation",
                    format!("must lie in (0, 1], got {theta}"),
                ));
            }
            sweep.relaxation = theta;
        }
        let spec = ProblemSpec {
            grid,
            time,
            eps,
            lambda,
            scheme,
            y0,
            target,
            adjoint_variant,
            newton,
        };
        spec.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(name, reason),
            other => config_err("<problem>", other.to_string()),
        })?;
        Ok((spec, sweep))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "domain": {"a": 0, "b": 1},
        "n_points": 17, "T": 0.01, "n_steps": 10,
        "epsilon": 0.05, "lambda": 0.1, "scheme": "s1",
        "y0": "cos(2*pi*x)", "target": "cos(2*pi*x)*exp(-t)"
    }"#;

    fn with(key: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        v[key] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    fn key_of(r: Result<(ProblemSpec<f64>, SweepConfig<f64>)>) -> String {
        match r {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn base_config_builds() {
        let (spec, sweep) = RunConfig::from_json_str(BASE)
            .unwrap()
            .to_problem()
            .unwrap();
        assert_eq!(spec.grid.nx(), 17);
        assert_eq!(spec.scheme, SchemeKind::S1);
        assert_eq!(sweep, SweepConfig::default());
        assert_eq!(spec.adjoint_variant, AdjointVariant::CoeffAtN);
    }

    #[test]
    fn zero_lambda_names_field() {
        let c = RunConfig::from_json_str(&with("lambda", "0")).unwrap();
        assert_eq!(key_of(c.to_problem()), "lambda");
    }

    #[test]
    fn unknown_scheme_lists_allowed() {
        let c = RunConfig::from_json_str(&with("scheme", "\"s4\"")).unwrap();
        match c.to_problem() {
            Err(Error::Config { key, message }) => {
                assert_eq!(key, "scheme");
                assert!(message.contains("s1, s2, s3"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        match RunConfig::from_json_str(&with("bogus", "1")) {
            Err(Error::Config { key, message }) => {
                assert_eq!(key, "bogus");
                assert!(message.contains("line"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_expression_names_field() {
        let c = RunConfig::from_json_str(&with("target", "\"cos(\"")).unwrap();
        assert_eq!(key_of(c.to_problem()), "target");
    }

    #[test]
    fn two_dimensional_domain() {
        let c =
            RunConfig::from_json_str(&with("domain", r#"{"a":0,"b":1,"a2":0,"b2":1}"#)).unwrap();
        let (spec, _) = c.to_problem().unwrap();
        assert_eq!(spec.grid.dim(), 2);
        assert_eq!(spec.grid.len(), 17 * 17);
    }

    #[test]
    fn y_in_one_dimension_is_rejected() {
        let c = RunConfig::from_json_str(&with("y0", "\"x*y\"")).unwrap();
        assert_eq!(key_of(c.to_problem()), "y0");
    }

    #[test]
    fn serialization_round_trips() {
        let c = RunConfig::from_json_str(BASE).unwrap();
        assert_eq!(RunConfig::from_json_str(&c.to_json_pretty()).unwrap(), c);
    }
}
