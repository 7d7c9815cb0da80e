//! Vanishing-parameter limits: closed-form shock locations, limit values of
//! `alpha`, and sweeps that measure how far each profile is from them.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::alpha::{select_root, solve_alpha, Branch};
use crate::chart::Charts;
use crate::error::{Error, Result};
use crate::gas::{FlowState, ShockPair};
use crate::model::{ModelKind, ReducedModel};
use crate::profile::{reconstruct, Profile};
use crate::quad::QuadratureSpec;

/// Limit of `alpha` as the parameter vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitAlpha {
    Value(f64),
    MinusInfinity,
}

impl LimitAlpha {
    pub fn value(self) -> f64 {
        match self {
            LimitAlpha::Value(v) => v,
            LimitAlpha::MinusInfinity => f64::NEG_INFINITY,
        }
    }
}

impl Serialize for LimitAlpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LimitAlpha::Value(v) => s.serialize_f64(*v),
            LimitAlpha::MinusInfinity => s.serialize_str("-inf"),
        }
    }
}

pub fn limit_alpha(model: &ReducedModel, branch: Branch) -> LimitAlpha {
    match (model.kind, branch) {
        (ModelKind::Hb, _) => LimitAlpha::Value(model.alpha_anchor()),
        (ModelKind::Vp, Branch::Divergent) => LimitAlpha::MinusInfinity,
        _ => LimitAlpha::Value(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitShock {
    pub model: ModelKind,
    pub delta: f64,
    /// Location from the primitive-variable form.
    pub x_s: f64,
    /// Same location from the Mach-number form.
    pub x_s_mach: f64,
    pub left: FlowState,
    pub right: FlowState,
}

/// The two algebraic forms `(primitive, Mach)` of the limit location.
pub fn location_forms(kind: ModelKind, pair: &ShockPair, delta: f64) -> Result<(f64, f64)> {
    let g = pair.gamma();
    let (q0, q1) = (pair.q0(), pair.q1());
    let (m0, m1) = (pair.m0_sq(), pair.m1_sq());
    let mach_factor = (1.0 - 1.0 / m0) / (1.0 / m1 - 1.0);
    Ok(match kind {
        ModelKind::Hb => {
            return Err(Error::InvalidInput("HB profiles have no limiting shock".into()));
        }
        ModelKind::Hp => {
            let a = pair.momentum;
            let (p0, p1) = (pair.p0(), pair.p1());
            let primitive = 0.5 * (a - 2.0 * p0) / (a - (p0 + p1));
            let gm = g * m0;
            let mach = 0.5 * (g + 1.0) / (g - 1.0) * (gm - 1.0) / (gm + 1.0);
            (primitive, mach)
        }
        ModelKind::Vb => {
            let r = (q0 / q1).powf(delta - g - 1.0) * (q0.powf(g + 1.0) - g) / (g - q1.powf(g + 1.0));
            let rm = (m0 / m1).powf(delta / (g + 1.0)) * mach_factor;
            (1.0 / (1.0 + r), 1.0 / (1.0 + rm))
        }
        ModelKind::Vp => {
            let c = (g + 1.0) / (g - 1.0);
            let r = ((c - q1 / q0) / (c - q0 / q1)).powf(delta) * q1 / q0;
            let rm = (m0 / m1).powf(delta) * mach_factor.powf(1.0 + 2.0 * delta);
            (1.0 / (1.0 + r), 1.0 / (1.0 + rm))
        }
    })
}

/// Location of the limiting normal shock.
pub fn limit_location(kind: ModelKind, pair: &ShockPair, delta: f64) -> Result<LimitShock> {
    if pair.jump != kind.jump() {
        return Err(Error::InvalidInput(format!(
            "model {kind} needs a {:?} shock pair, got {:?}",
            kind.jump(),
            pair.jump
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("delta must be non-negative, got {delta}")));
    }
    let (primitive, mach) = location_forms(kind, pair, delta)?;
    let x_s = if primitive > 1.0 && primitive <= 1.0 + 1e-12 { 1.0 } else { primitive };
    if !(x_s > 0.0 && x_s <= 1.0) {
        return Err(Error::XOutOfUnitInterval { x: primitive });
    }
    Ok(LimitShock {
        model: kind,
        delta,
        x_s,
        x_s_mach: mach,
        left: pair.upstream,
        right: pair.downstream,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub param: f64,
    pub alpha: Option<f64>,
    pub ln_alpha_offset: Option<f64>,
    pub residual: Option<f64>,
    pub branch: Option<Branch>,
    pub midpoint_x: Option<f64>,
    /// `||w - step(x_s)||_1` against the limiting shock.
    pub l1_to_limit: Option<f64>,
    /// HB: measure of `{x : |v - v*| < tol_v}`.
    pub plateau_measure: Option<f64>,
    /// HB: smallest L1 distance to a step from `w_in` to `w_out`.
    pub step_family_l1: Option<f64>,
    pub max_pressure: Option<f64>,
    /// `Name: message` of the failure at this parameter.
    pub error: Option<String>,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

impl SweepEntry {
    fn failed(param: f64, e: &Error) -> Self {
        Self {
            param,
            alpha: None,
            ln_alpha_offset: None,
            residual: None,
            branch: None,
            midpoint_x: None,
            l1_to_limit: None,
            plateau_measure: None,
            step_family_l1: None,
            max_pressure: None,
            error: Some(format!("{}: {e}", e.name())),
            profile: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub model: ModelKind,
    pub delta: f64,
    pub branch: Branch,
    pub limit: Option<LimitShock>,
    pub limit_alpha: LimitAlpha,
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    pub fn succeeded(&self) -> usize {
        self.entries.iter().filter(|e| e.is_ok()).count()
    }
}

/// Branch followed by default: the only root, or the near-zero one for VP.
pub fn default_branch(kind: ModelKind) -> Branch {
    match kind {
        ModelKind::Hb => Branch::NearFStar,
        _ => Branch::NearZero,
    }
}

/// HB plateau tolerance `0.01 (v1 - v0)`.
pub fn plateau_tolerance(model: &ReducedModel) -> f64 {
    0.01 * model.span()
}

/// Grid spacing for the step-family minimization.
pub const STEP_FAMILY_GRID: f64 = 1e-3;

/// Solve, reconstruct and measure at each parameter. Parameters are sorted
/// into decreasing order; failures are recorded per entry.
pub fn run_sweep(
    model: &ReducedModel,
    params: &[f64],
    branch: Option<Branch>,
    grid_n: usize,
    spec: &QuadratureSpec,
) -> Result<SweepResult> {
    if params.is_empty() {
        return Err(Error::InvalidInput("empty parameter list".into()));
    }
    if let Some(p) = params.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidInput(format!("parameter must be positive, got {p}")));
    }
    spec.validate()?;
    let branch = branch.unwrap_or_else(|| default_branch(model.kind));
    let mut params = params.to_vec();
    params.sort_by(|a, b| b.total_cmp(a));
    params.dedup();

    let limit = match (model.kind, branch) {
        (ModelKind::Hb, _) | (_, Branch::Divergent) => None,
        _ => Some(limit_location(model.kind, &model.pair, model.delta)?),
    };
    let x_s = limit.as_ref().map(|l| l.x_s);
    let entries = params
        .par_iter()
        .map(|&param| {
            sweep_entry(model, param, branch, x_s, grid_n, spec)
                .unwrap_or_else(|e| SweepEntry::failed(param, &e))
        })
        .collect();
    Ok(SweepResult {
        model: model.kind,
        delta: model.delta,
        branch,
        limit,
        limit_alpha: limit_alpha(model, branch),
        entries,
    })
}

fn sweep_entry(
    model: &ReducedModel,
    param: f64,
    branch: Branch,
    x_s: Option<f64>,
    grid_n: usize,
    spec: &QuadratureSpec,
) -> Result<SweepEntry> {
    let root = select_root(&solve_alpha(model, param, spec)?, branch)?;
    let profile = reconstruct(model, param, &root, grid_n, spec)?;
    let charts = Charts::build(model, param, root.ln_offset, spec)?;
    let (plateau_measure, step_family_l1) = if model.kind == ModelKind::Hb {
        let v_star = model.critical_point().w_star;
        let tol = plateau_tolerance(model);
        let measure = charts.x_of_w(v_star + tol) - charts.x_of_w(v_star - tol);
        (Some(measure.abs()), Some(min_step_l1(&charts)))
    } else {
        (None, None)
    };
    Ok(SweepEntry {
        param,
        alpha: Some(root.alpha),
        ln_alpha_offset: Some(root.ln_offset),
        residual: Some(root.residual),
        branch: Some(root.branch),
        midpoint_x: Some(profile.midpoint_x),
        l1_to_limit: x_s.map(|x| charts.l1_to_step(x)),
        plateau_measure,
        step_family_l1,
        max_pressure: (model.kind == ModelKind::Vp).then(|| profile.max_pressure()),
        error: None,
        profile: Some(profile),
    })
}

fn min_step_l1(charts: &Charts) -> f64 {
    let n = (1.0 / STEP_FAMILY_GRID).round() as usize;
    (0..=n).map(|k| charts.l1_to_step(k as f64 / n as f64)).fold(f64::INFINITY, f64::min)
}

/// L1 distance to the step with its jump at `x_s`, for an already solved root.
pub fn l1_to_step(
    model: &ReducedModel,
    param: f64,
    ln_offset: f64,
    x_s: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x_s) {
        return Err(Error::XOutOfUnitInterval { x: x_s });
    }
    Ok(Charts::build(model, param, ln_offset, spec)?.l1_to_step(x_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::{make_upstream, rh_downstream, upstream_from_velocity, GasLaw, Jump};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn poly_pair(gamma: f64, m0_sq: f64) -> ShockPair {
        let law = GasLaw::polytropic(gamma, 1.0).unwrap();
        rh_downstream(&make_upstream(&law, m0_sq).unwrap(), &law, Jump::FullEuler).unwrap()
    }

    fn vb_pair(gamma: f64, q0: f64) -> ShockPair {
        let law = GasLaw::barotropic(gamma).unwrap();
        let u0 = upstream_from_velocity(&law, q0).unwrap();
        rh_downstream(&u0, &law, Jump::MassMomentum).unwrap()
    }

    #[test]
    fn hp_location() {
        let s = limit_location(ModelKind::Hp, &poly_pair(1.4, 1.2), 0.0).unwrap();
        assert_relative_eq!(s.x_s, 3.0 * 0.68 / 2.68, max_relative = 1e-13);
        assert_relative_eq!(s.x_s, s.x_s_mach, max_relative = 1e-12);
    }

    #[test]
    fn hp_boundary() {
        let g = 1.4;
        let edge = (3.0 * g - 1.0) / (g * (3.0 - g));
        let s = limit_location(ModelKind::Hp, &poly_pair(g, edge), 0.0).unwrap();
        assert!((s.x_s - 1.0).abs() <= 1e-12);
        let beyond = limit_location(ModelKind::Hp, &poly_pair(g, edge * 1.01), 0.0);
        assert!(matches!(beyond, Err(Error::XOutOfUnitInterval { .. })));
    }

    #[test]
    fn vb_locations() {
        let pair = vb_pair(1.4, 1.5);
        for (delta, x) in [(0.0, 0.64340539), (0.5, 0.58161586), (1.0, 0.51715450), (2.0, 0.38867493)] {
            let s = limit_location(ModelKind::Vb, &pair, delta).unwrap();
            assert!((s.x_s - x).abs() < 1e-8, "{delta}: {}", s.x_s);
        }
    }

    #[test]
    fn vp_locations() {
        let pair = poly_pair(1.4, 1.2);
        for (delta, x) in [(0.0, 0.5373134), (0.5, 0.5298239), (1.0, 0.5223209), (2.0, 0.5072880)] {
            let s = limit_location(ModelKind::Vp, &pair, delta).unwrap();
            assert!((s.x_s - x).abs() < 1e-7, "{delta}: {}", s.x_s);
        }
        let s = limit_location(ModelKind::Vp, &pair, 0.0).unwrap();
        assert_eq!(s.x_s, pair.q0() / (pair.q0() + pair.q1()));
    }

    #[test]
    fn delta_zero_drops_power_factor() {
        let pair = vb_pair(1.4, 1.5);
        let (q0, q1, g) = (pair.q0(), pair.q1(), 1.4);
        let s = limit_location(ModelKind::Vb, &pair, 0.0).unwrap();
        let bare = 1.0 / (1.0 + (q0 / q1).powf(-g - 1.0) * (q0.powf(g + 1.0) - g) / (g - q1.powf(g + 1.0)));
        assert_eq!(s.x_s, bare);
    }

    #[test]
    fn wrong_jump_and_hb() {
        let pair = vb_pair(1.4, 1.5);
        assert!(matches!(limit_location(ModelKind::Vp, &pair, 1.0), Err(Error::InvalidInput(_))));
        assert!(location_forms(ModelKind::Hb, &pair, 0.0).is_err());
    }

    #[test]
    fn limit_alpha_values() {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        let hb = ReducedModel::new(
            ModelKind::Hb,
            rh_downstream(&u0, &law, Jump::MassBernoulli).unwrap(),
            0.0,
        )
        .unwrap();
        // oracle: minimum of f on a fine grid
        let a = 2.0 / (1.0 - 1.4);
        let k = 1.4 / 0.4;
        let f = |v: f64| 0.5 * v.powf(a) + k * v;
        let (v0, v1) = (hb.w_in, hb.w_out);
        let n = 200_000;
        let g_min = (0..=n).map(|i| f(v0 + (v1 - v0) * i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
        let expected = f(v0) - g_min;
        assert!((limit_alpha(&hb, Branch::NearFStar).value() - expected).abs() < 1e-9);
        let vp = ReducedModel::new(ModelKind::Vp, poly_pair(1.4, 1.2), 2.0).unwrap();
        assert_eq!(limit_alpha(&vp, Branch::Divergent), LimitAlpha::MinusInfinity);
        assert_eq!(limit_alpha(&vp, Branch::NearZero).value(), 0.0);
    }

    #[test]
    fn l1_identity_matches_trapezoid() {
        let model = ReducedModel::new(ModelKind::Vb, vb_pair(1.4, 1.5), 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let root = solve_alpha(&model, 0.05, &spec).unwrap()[0];
        let profile = reconstruct(&model, 0.05, &root, 20001, &spec).unwrap();
        let x_s = 0.4;
        let step = |x: f64| if x < x_s { model.w_in } else { model.w_out };
        let s = &profile.samples;
        let trap: f64 = s
            .windows(2)
            .map(|p| 0.5 * (p[1].x - p[0].x) * ((p[0].w - step(p[0].x)).abs() + (p[1].w - step(p[1].x)).abs()))
            .sum();
        let exact = l1_to_step(&model, 0.05, root.ln_offset, x_s, &spec).unwrap();
        assert!((trap - exact).abs() < 1e-5, "{trap} vs {exact}");
    }

    #[test]
    fn hp_sweep_converges() {
        let model = ReducedModel::new(ModelKind::Hp, poly_pair(1.4, 1.2), 0.0).unwrap();
        let params = [1e-3, 1e-1, 1e-2, 3e-2, 3e-3];
        let res = run_sweep(&model, &params, None, 257, &QuadratureSpec::default()).unwrap();
        assert_eq!(res.succeeded(), 5);
        let p: Vec<f64> = res.entries.iter().map(|e| e.param).collect();
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        let l1: Vec<f64> = res.entries.iter().map(|e| e.l1_to_limit.unwrap()).collect();
        assert!(l1.windows(2).all(|w| w[1] < w[0]), "{l1:?}");
        let gap: Vec<f64> = res
            .entries
            .iter()
            .map(|e| (e.midpoint_x.unwrap() - res.limit.as_ref().unwrap().x_s).abs())
            .collect();
        assert!(gap.windows(2).skip(1).all(|w| w[1] < w[0] * 1.1), "{gap:?}");
    }

    #[test]
    fn hb_sweep_plateau() {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        let model = ReducedModel::new(
            ModelKind::Hb,
            rh_downstream(&u0, &law, Jump::MassBernoulli).unwrap(),
            0.0,
        )
        .unwrap();
        let res = run_sweep(&model, &[1e-1, 1e-2, 1e-3], None, 129, &QuadratureSpec::default()).unwrap();
        let plateau: Vec<f64> = res.entries.iter().map(|e| e.plateau_measure.unwrap()).collect();
        assert!(plateau.windows(2).all(|w| w[1] > w[0]), "{plateau:?}");
        assert!(plateau[2] > 0.8);
        assert!(res.limit.is_none());
    }

    #[test]
    fn sweep_records_failures() {
        let model = ReducedModel::new(ModelKind::Vp, poly_pair(1.4, 1.2), 2.0).unwrap();
        let res =
            run_sweep(&model, &[1e3, 1e-2], Some(Branch::NearZero), 33, &QuadratureSpec::default()).unwrap();
        assert_eq!(res.succeeded(), 1);
        assert!(res.entries[0].error.as_deref().unwrap().starts_with("NoRootInDomain"));
        assert!(run_sweep(&model, &[], None, 33, &QuadratureSpec::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn location_forms_agree(gamma in 1.05f64..2.95, t in 0.02f64..0.98, delta in 0.0f64..3.0) {
            // VP needs 1 < M0^2 < 2 gamma / (gamma - 1)
            let m0_sq = 1.0 + t * (2.0 * gamma / (gamma - 1.0) - 1.0);
            let pair = poly_pair(gamma, m0_sq);
            let (a, b) = location_forms(ModelKind::Vp, &pair, delta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            let (a, b) = location_forms(ModelKind::Hp, &pair, 0.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            let q0 = (gamma * m0_sq).powf(1.0 / (gamma + 1.0));
            let (a, b) = location_forms(ModelKind::Vb, &vb_pair(gamma, q0), delta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
