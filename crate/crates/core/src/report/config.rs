//! Flat JSON run configuration.
//!
//! ```json
//! {"model": "HP", "gamma": 1.4, "m0_sq": 1.2,
//!  "geometric": {"start": 0.1, "factor": 0.5, "count": 5}}
//! ```
//!
//! Keys: `model` (HB|HP|VB|VP), `gamma`, one of `m0_sq` / `q0` (`q0` only for
//! the barotropic models), `gas_constant` (default 1), `delta` (VB/VP), one of
//! `params` / `epsilon` (HB/HP, converted to `kappa = epsilon/(gamma-1)`) /
//! `geometric`, `grid_n` (default 512), `rel_tol`, `abs_tol`, `max_depth`,
//! `branch` (near-zero|near-fstar|divergent) and `out_dir`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Failure;
use crate::alpha::Branch;
use crate::gas::{
    admissibility, make_upstream, rh_downstream, upstream_from_velocity, AdmissibilityReport,
    GasLaw, ShockPair,
};
use crate::model::{ModelKind, ReducedModel};
use crate::quad::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(default = "default_gas_constant")]
    pub gas_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometric: Option<Geometric>,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_depth")]
    pub max_depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn inadmissible(e: crate::Error) -> Failure {
    Failure::Inadmissible(format!("{}: {e}", e.name()))
}

fn default_gas_constant() -> f64 {
    1.0
}

fn default_grid_n() -> usize {
    512
}

fn default_rel_tol() -> f64 {
    QuadratureSpec::default().rel_tol
}

fn default_abs_tol() -> f64 {
    QuadratureSpec::default().abs_tol
}

fn default_max_depth() -> u32 {
    QuadratureSpec::default().max_depth
}

/// Everything a command needs once the configuration is validated.
#[derive(Debug, Clone)]
pub struct Setup {
    pub pair: ShockPair,
    pub admissibility: AdmissibilityReport,
    pub model: ReducedModel,
    pub spec: QuadratureSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::Config(m));
        match (self.m0_sq, self.q0) {
            (Some(_), Some(_)) => return bad("give only one of m0_sq and q0".into()),
            (None, None) => return bad("one of m0_sq and q0 is required".into()),
            (None, Some(_)) if !self.model.is_barotropic() => {
                return bad(format!("q0 applies to the barotropic models, not {}", self.model));
            }
            _ => {}
        }
        let sources = [self.params.is_some(), self.epsilon.is_some(), self.geometric.is_some()];
        if sources.iter().filter(|s| **s).count() > 1 {
            return bad("give at most one of params, epsilon and geometric".into());
        }
        if self.epsilon.is_some() && !matches!(self.model, ModelKind::Hb | ModelKind::Hp) {
            return bad(format!("epsilon applies to HB and HP, not {}", self.model));
        }
        if self.delta.is_some() && !matches!(self.model, ModelKind::Vb | ModelKind::Vp) {
            return bad(format!("delta applies to VB and VP, not {}", self.model));
        }
        if self.grid_n < 16 {
            return bad(format!("grid_n must be at least 16, got {}", self.grid_n));
        }
        if let Some(g) = self.geometric {
            if !(g.start > 0.0 && g.factor > 0.0 && g.factor != 1.0 && g.count > 0) {
                return bad(format!("invalid geometric sequence {g:?}"));
            }
        }
        self.spec().validate().map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_depth: self.max_depth,
            ..QuadratureSpec::default()
        }
    }

    /// The parameter sequence (`kappa` or `mu`) named by the configuration.
    pub fn resolved_params(&self) -> Result<Vec<f64>, Failure> {
        let params = if let Some(p) = &self.params {
            p.clone()
        } else if let Some(eps) = &self.epsilon {
            eps.iter().map(|e| e / (self.gamma - 1.0)).collect()
        } else if let Some(g) = self.geometric {
            (0..g.count).map(|k| g.start * g.factor.powi(k as i32)).collect()
        } else {
            Vec::new()
        };
        if params.is_empty() {
            return Err(Failure::Config("empty parameter list".into()));
        }
        if let Some(p) = params.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Failure::Config(format!("parameters must be positive, got {p}")));
        }
        Ok(params)
    }

    /// The shock pair and its admissibility flags; fails only when no pair
    /// exists (for instance a subsonic upstream state).
    pub fn pair(&self) -> Result<(ShockPair, AdmissibilityReport), Failure> {
        let law = if self.model.is_barotropic() {
            GasLaw::barotropic(self.gamma)
        } else {
            GasLaw::polytropic(self.gamma, self.gas_constant)
        }
        .map_err(inadmissible)?;
        let upstream = match (self.m0_sq, self.q0) {
            (Some(m), _) => make_upstream(&law, m),
            (None, Some(q)) => upstream_from_velocity(&law, q),
            (None, None) => unreachable!("checked on load"),
        }
        .map_err(inadmissible)?;
        let pair = rh_downstream(&upstream, &law, self.model.jump()).map_err(inadmissible)?;
        Ok((pair, admissibility(&pair, self.model)))
    }

    /// Build the shock pair and model, rejecting inadmissible inputs.
    pub fn setup(&self) -> Result<Setup, Failure> {
        let (pair, report) = self.pair()?;
        if !report.admissible {
            return Err(Failure::Inadmissible(format!(
                "inadmissible {} configuration: {}",
                self.model,
                failed_conditions(&report).join(", ")
            )));
        }
        let model = ReducedModel::new(self.model, pair, self.delta.unwrap_or(0.0))
            .map_err(inadmissible)?;
        Ok(Setup { pair, admissibility: report, model, spec: self.spec() })
    }
}

/// Names of the admissibility conditions that fail.
pub fn failed_conditions(r: &AdmissibilityReport) -> Vec<&'static str> {
    let mut out = Vec::new();
    if !r.jump_matches {
        out.push("jump");
    }
    if !r.supersonic {
        out.push("supersonic");
    }
    if !r.subsonic_downstream {
        out.push("subsonic_downstream");
    }
    if !r.entropy {
        out.push("entropy");
    }
    match r.model {
        ModelKind::Hp if !(r.hp1 || r.hp2) => out.push("hp1/hp2"),
        ModelKind::Vp if !r.vp_mach_bound => out.push("vp_mach_bound"),
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_epsilon() {
        let cfg = RunConfig::from_json(r#"{"model":"HP","gamma":1.4,"m0_sq":1.2,"epsilon":[0.04]}"#)
            .unwrap();
        assert_eq!(cfg.grid_n, 512);
        assert_eq!(cfg.gas_constant, 1.0);
        assert!((cfg.resolved_params().unwrap()[0] - 0.1).abs() < 1e-15);
        assert!(cfg.setup().is_ok());
    }

    #[test]
    fn geometric_sequence() {
        let cfg = RunConfig::from_json(
            r#"{"model":"VB","gamma":1.4,"q0":1.5,"delta":1,"geometric":{"start":0.1,"factor":0.1,"count":3}}"#,
        )
        .unwrap();
        let p = cfg.resolved_params().unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[2] - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"model":"HP","gamma":1.4}"#,
            r#"{"model":"HP","gamma":1.4,"q0":1.5}"#,
            r#"{"model":"VB","gamma":1.4,"q0":1.5,"epsilon":[0.1]}"#,
            r#"{"model":"HB","gamma":1.4,"q0":1.5,"delta":1}"#,
            r#"{"model":"HB","gamma":1.4,"q0":1.5,"colour":1}"#,
            r#"{"model":"XX","gamma":1.4,"q0":1.5}"#,
            r#"{"model":"HB","gamma":1.4,"q0":1.5,"grid_n":4}"#,
            "not json",
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(Failure::Config(_))), "{text}");
        }
        let empty = RunConfig::from_json(r#"{"model":"HB","gamma":1.4,"q0":1.5,"params":[]}"#).unwrap();
        assert!(matches!(empty.resolved_params(), Err(Failure::Config(_))));
    }

    #[test]
    fn inadmissible_inputs() {
        let sub = RunConfig::from_json(r#"{"model":"HP","gamma":1.4,"m0_sq":1.0}"#).unwrap();
        match sub.setup() {
            Err(Failure::Inadmissible(m)) => assert!(m.starts_with("NotSupersonic"), "{m}"),
            other => panic!("{other:?}"),
        }
        let hp = RunConfig::from_json(r#"{"model":"HP","gamma":1.4,"m0_sq":2.5}"#).unwrap();
        assert_eq!(hp.setup().unwrap_err().exit_code(), 2);
    }
}
