//! Solving `H(alpha) = 1` for the integration constant.
//!
//! `alpha` approaches its limit exponentially fast in `1/param`, so the
//! search runs in the offset coordinate `z = ln|alpha - anchor|` (see
//! [`ReducedModel::offset_from_alpha`]). In that coordinate `H` decreases
//! for every model except on the divergent side of VP with `delta > 1`.

use std::cell::Cell;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chart::Charts;
use crate::error::{Error, Result};
use crate::model::{End, ModelKind, ReducedModel};
use crate::quad::{integrate, EndpointStrategy, QuadratureSpec};
use crate::roots::golden_min;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `alpha -> 0` as the parameter vanishes.
    NearZero,
    /// `alpha -> -f(v*)` (HB).
    NearFStar,
    /// `alpha -> -infinity` (second VP root for `delta > 1`).
    Divergent,
}

impl FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near-zero" => Ok(Branch::NearZero),
            "near-fstar" => Ok(Branch::NearFStar),
            "divergent" => Ok(Branch::Divergent),
            _ => Err(Error::InvalidInput(format!("unknown branch '{s}'"))),
        }
    }
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::NearZero => "near-zero",
            Branch::NearFStar => "near-fstar",
            Branch::Divergent => "divergent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRoot {
    /// May underflow to the anchor value for very small parameters;
    /// `ln_offset` always carries the full information.
    pub alpha: f64,
    /// `ln|alpha - anchor|`.
    pub ln_offset: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub ln_bracket: (f64, f64),
    pub branch: Branch,
    pub evaluations: usize,
}

/// Largest `|alpha - anchor|` tried while expanding a bracket.
pub const ALPHA_CAP: f64 = 1e12;
const Z_FLOOR: f64 = -1e7;

fn check_param(param: f64) -> Result<()> {
    if param > 0.0 && param.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("parameter must be positive, got {param}")))
    }
}

/// `H(alpha) = scale * int weight/|F| dw`.
pub fn eval_h(model: &ReducedModel, param: f64, alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    let z = model.offset_from_alpha(alpha)?;
    eval_h_offset(model, param, z, spec)
}

/// `H` at `alpha = anchor ± e^z`.
pub fn eval_h_offset(model: &ReducedModel, param: f64, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_param(param)?;
    spec.validate()?;
    Ok(model.scale(param) * unscaled_integral(model, z, spec)?)
}

fn unscaled_integral(model: &ReducedModel, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    match spec.endpoint_strategy {
        EndpointStrategy::LogSubstitution => {
            let charts = Charts::build(model, 1.0, z, spec)?;
            Ok(charts.inflow.total() + charts.outflow.total())
        }
        EndpointStrategy::RawAdaptive => {
            let mut total = 0.0;
            for end in [End::Inflow, End::Outflow] {
                let f = |h: f64| model.density(end, h.ln(), z) / h;
                total += integrate(&f, &[0.0, model.chart_len(end)], spec)?.value;
            }
            Ok(total)
        }
    }
}

/// Unscaled integral `J(alpha)` over an `alpha` grid.
pub fn scan_j(model: &ReducedModel, alpha_grid: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    alpha_grid
        .iter()
        .map(|&a| unscaled_integral(model, model.offset_from_alpha(a)?, spec))
        .collect()
}

struct Objective<'a> {
    model: &'a ReducedModel,
    scale: f64,
    spec: &'a QuadratureSpec,
    count: Cell<usize>,
}

impl Objective<'_> {
    /// `H(z) - 1`.
    fn g(&self, z: f64) -> Result<f64> {
        self.count.set(self.count.get() + 1);
        Ok(self.scale * unscaled_integral(self.model, z, self.spec)? - 1.0)
    }
}

/// All roots of `H(alpha) = 1`, ordered near-zero first.
pub fn solve_alpha(model: &ReducedModel, param: f64, spec: &QuadratureSpec) -> Result<Vec<AlphaRoot>> {
    check_param(param)?;
    spec.validate()?;
    let obj = Objective { model, scale: model.scale(param), spec, count: Cell::new(0) };
    let z_cap = ALPHA_CAP.ln();
    match model.kind {
        ModelKind::Vp if model.delta > 1.0 => {
            let (z_min, g_min) = locate_minimum(&obj, z_cap)?;
            if g_min >= 0.0 {
                return Err(Error::NoRootInDomain);
            }
            let (near, far) = expand(&obj, z_min, g_min, -1.0, 1.0, z_cap)?;
            let first = refine(&obj, far, near, Branch::NearZero)?;
            let start = z_min.max(0.0);
            let g_start = if start == z_min { g_min } else { obj.g(start)? };
            if g_start >= 0.0 {
                let second = refine(&obj, (z_min, g_min), (start, g_start), Branch::Divergent)?;
                return Ok(vec![first, second]);
            }
            match expand(&obj, start, g_start, 1.0, 2f64.ln(), z_cap) {
                Ok((a, b)) => Ok(vec![first, refine(&obj, a, b, Branch::Divergent)?]),
                Err(Error::BracketExpansionExhausted { .. }) => Ok(vec![first]),
                Err(e) => Err(e),
            }
        }
        _ => {
            let branch =
                if model.kind == ModelKind::Hb { Branch::NearFStar } else { Branch::NearZero };
            let z0 = seed(model, param);
            let g0 = obj.g(z0)?;
            let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
            let (a, b) = expand(&obj, z0, g0, dir, 1.0, z_cap)?;
            Ok(vec![refine(&obj, a, b, branch)?])
        }
    }
}

/// The root carrying `branch`, if any.
pub fn select_root(roots: &[AlphaRoot], branch: Branch) -> Result<AlphaRoot> {
    roots.iter().copied().find(|r| r.branch == branch).ok_or(Error::NoRootInDomain)
}

/// Starting offset from the endpoint-layer asymptotics of `H`.
fn seed(model: &ReducedModel, param: f64) -> f64 {
    let scale = model.scale(param);
    match model.kind {
        ModelKind::Hb => {
            // H ~ kappa pi / sqrt(d f''(v*)/2) for a quadratic well of depth d
            let cp = model.critical_point();
            let g = model.gamma();
            let a = 2.0 / (1.0 - g);
            let f2 = 0.5 * a * (a - 1.0) * cp.w_star.powf(a - 2.0);
            (2.0 * (scale * std::f64::consts::PI).powi(2) / f2).ln()
        }
        _ => {
            let s = model.plateau_density(End::Inflow) + model.plateau_density(End::Outflow);
            let top = model.chart_len(End::Inflow).ln().min(model.chart_len(End::Outflow).ln());
            (top - 1.0 / (scale * s)).max(Z_FLOOR / 2.0)
        }
    }
}

/// Step from `z` in direction `dir` with doubling steps until `g` changes
/// sign; returns the last point before the change and the first after it.
fn expand(
    obj: &Objective,
    z: f64,
    g: f64,
    dir: f64,
    first_step: f64,
    z_cap: f64,
) -> Result<((f64, f64), (f64, f64))> {
    let sign = g > 0.0;
    let mut step = first_step;
    let mut cur = (z, g);
    loop {
        let mut next = cur.0 + dir * step;
        if dir > 0.0 && next > z_cap {
            if cur.0 >= z_cap {
                return Err(Error::BracketExpansionExhausted { limit: ALPHA_CAP });
            }
            next = z_cap;
        }
        if dir < 0.0 && next < Z_FLOOR {
            return Err(Error::NoRootInDomain);
        }
        let gn = obj.g(next)?;
        if (gn > 0.0) != sign || gn == 0.0 {
            return Ok((cur, (next, gn)));
        }
        cur = (next, gn);
        step *= 2.0;
    }
}

/// Bisection on `[a, b]` followed by two secant steps.
fn refine(obj: &Objective, a: (f64, f64), b: (f64, f64), branch: Branch) -> Result<AlphaRoot> {
    let (mut lo, mut hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    if (lo.1 > 0.0) == (hi.1 > 0.0) && lo.1 != 0.0 && hi.1 != 0.0 {
        return Err(Error::NoRootInDomain);
    }
    let lo_positive = lo.1 > 0.0;
    while hi.0 - lo.0 > 1e-13 * (1.0 + lo.0.abs().max(hi.0.abs())) {
        let m = 0.5 * (lo.0 + hi.0);
        if m <= lo.0 || m >= hi.0 {
            break;
        }
        let gm = obj.g(m)?;
        if gm == 0.0 {
            lo = (m, gm);
            hi = (m, gm);
            break;
        }
        if (gm > 0.0) == lo_positive {
            lo = (m, gm);
        } else {
            hi = (m, gm);
        }
    }
    let mut best = if lo.1.abs() <= hi.1.abs() { lo } else { hi };
    for _ in 0..2 {
        if hi.1 == lo.1 || hi.0 == lo.0 {
            break;
        }
        let zs = hi.0 - hi.1 * (hi.0 - lo.0) / (hi.1 - lo.1);
        if !(zs > lo.0 && zs < hi.0) {
            break;
        }
        let gs = obj.g(zs)?;
        if gs.abs() < best.1.abs() {
            best = (zs, gs);
        }
        if (gs > 0.0) == lo_positive {
            lo = (zs, gs);
        } else {
            hi = (zs, gs);
        }
    }
    let m = obj.model;
    let (a_lo, a_hi) = (m.alpha_from_offset(lo.0), m.alpha_from_offset(hi.0));
    Ok(AlphaRoot {
        alpha: m.alpha_from_offset(best.0),
        ln_offset: best.0,
        residual: best.1.abs(),
        bracket: (a_lo.min(a_hi), a_lo.max(a_hi)),
        ln_bracket: (lo.0, hi.0),
        branch,
        evaluations: obj.count.get(),
    })
}

/// Minimum of `H - 1` over the offset coordinate (VP, `delta > 1`).
fn locate_minimum(obj: &Objective, z_cap: f64) -> Result<(f64, f64)> {
    let mut best = (f64::NAN, f64::INFINITY);
    let mut values = Vec::new();
    let mut z = -40.0;
    while z <= z_cap {
        let g = obj.g(z)?;
        values.push((z, g));
        if g < best.1 {
            best = (z, g);
        }
        z += 1.0;
    }
    let lo = (best.0 - 1.0).max(-40.0);
    let hi = (best.0 + 1.0).min(z_cap);
    let err = Cell::new(None);
    let (zm, gm) = golden_min(
        |z| match obj.g(z) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-6,
    );
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(if gm < best.1 { (zm, gm) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::{make_upstream, rh_downstream, upstream_from_velocity, GasLaw, Jump};
    use crate::quad::midpoint_rule;

    fn hb() -> ReducedModel {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        ReducedModel::new(ModelKind::Hb, rh_downstream(&u0, &law, Jump::MassBernoulli).unwrap(), 0.0)
            .unwrap()
    }

    fn vb(delta: f64) -> ReducedModel {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        ReducedModel::new(ModelKind::Vb, rh_downstream(&u0, &law, Jump::MassMomentum).unwrap(), delta)
            .unwrap()
    }

    fn poly(kind: ModelKind, delta: f64) -> ReducedModel {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let u0 = make_upstream(&law, 1.2).unwrap();
        ReducedModel::new(kind, rh_downstream(&u0, &law, Jump::FullEuler).unwrap(), delta).unwrap()
    }

    /// Brute-force H: 10^6-point midpoint rule in w, split at the chart boundary.
    fn midpoint_h(m: &ReducedModel, param: f64, alpha: f64) -> f64 {
        let split = m.w_in + (m.w_out - m.w_in).signum() * m.chart_len(End::Inflow);
        let f = |w: f64| m.weight(w).unwrap() / m.flux(w, alpha).unwrap().abs();
        let n = 500_000;
        let (a, b) = (m.w_in.min(split), m.w_in.max(split));
        let (c, d) = (m.w_out.min(split), m.w_out.max(split));
        m.scale(param) * (midpoint_rule(f, a, b, n) + midpoint_rule(f, c, d, n))
    }

    #[test]
    fn h_matches_brute_force() {
        let spec = QuadratureSpec::default();
        let hbm = hb();
        let cases = [
            (hbm, 0.1, hbm.alpha_anchor() * 1.01),
            (poly(ModelKind::Hp, 0.0), 0.05, 0.01),
            (vb(1.0), 0.02, -0.01),
            (poly(ModelKind::Vp, 1.0), 0.01, -0.05),
            (poly(ModelKind::Vp, 2.0), 1e-3, -3.0),
        ];
        for (m, param, alpha) in cases {
            let h = eval_h(&m, param, alpha, &spec).unwrap();
            let oracle = midpoint_h(&m, param, alpha);
            assert!((h - oracle).abs() < 1e-8_f64.max(1e-6 * h), "{}: {h} vs {oracle}", m.kind);
        }
    }

    #[test]
    fn raw_strategy_agrees_for_moderate_alpha() {
        let m = poly(ModelKind::Hp, 0.0);
        let log = eval_h(&m, 0.05, 0.01, &QuadratureSpec::default()).unwrap();
        let raw_spec =
            QuadratureSpec { endpoint_strategy: EndpointStrategy::RawAdaptive, ..Default::default() };
        let raw = eval_h(&m, 0.05, 0.01, &raw_spec).unwrap();
        assert!((log - raw).abs() < 1e-9 * log);
    }

    #[test]
    fn h_monotone_in_alpha() {
        let spec = QuadratureSpec::default();
        let m = hb();
        let a = m.alpha_anchor();
        let h1 = eval_h(&m, 0.05, a * 1.001, &spec).unwrap();
        let h2 = eval_h(&m, 0.05, a * 1.01, &spec).unwrap();
        assert!(h1 > h2);
        let m = vb(0.5);
        let h1 = eval_h(&m, 0.05, -0.1, &spec).unwrap();
        let h2 = eval_h(&m, 0.05, -0.01, &spec).unwrap();
        assert!(h1 < h2);
        assert!(eval_h(&m, 0.05, 0.1, &spec).is_err());
    }

    #[test]
    fn hb_large_alpha_small_h() {
        let m = hb();
        let h = eval_h(&m, 0.1, 1e6, &QuadratureSpec::default()).unwrap();
        assert!(h < 0.1 * m.span() / 1e6 * 1.0001);
    }

    #[test]
    fn hb_root_inside_bracket() {
        let spec = QuadratureSpec::default();
        let m = hb();
        for kappa in [0.1, 0.01, 1e-3] {
            let roots = solve_alpha(&m, kappa, &spec).unwrap();
            assert_eq!(roots.len(), 1);
            let r = roots[0];
            assert_eq!(r.branch, Branch::NearFStar);
            assert!(r.residual < 1e-10);
            let b = m.analytic_alpha_bracket(kappa).unwrap();
            assert!(r.ln_offset > b.offset_lo && r.ln_offset < b.offset_hi, "{kappa}: {r:?} {b:?}");
            assert!(r.alpha > m.alpha_anchor());
        }
    }

    /// H for VB by a midpoint rule in `ln(distance to the nearer end)`, using
    /// a direct transcription of `g(u) = u + u^-gamma`.
    fn vb_log_midpoint(q0: f64, q1: f64, delta: f64, mu: f64, alpha: f64) -> f64 {
        let g = |u: f64| u + u.powf(-1.4);
        let integrand = |u: f64| u.powf(-delta) / (g(u) - g(q0) + alpha).abs();
        let t_lo = alpha.abs().ln() - 40.0;
        let t_hi = (0.5 * (q0 - q1)).ln();
        let n = 500_000;
        let mut total = 0.0;
        for (end, dir) in [(q0, -1.0), (q1, 1.0)] {
            total += midpoint_rule(
                |t: f64| {
                    let h = t.exp();
                    integrand(end + dir * h) * h
                },
                t_lo,
                t_hi,
                n,
            );
        }
        mu * total
    }

    #[test]
    fn vb_root_against_bisection_oracle() {
        let spec = QuadratureSpec::default();
        let m = vb(1.0);
        let r = solve_alpha(&m, 0.02, &spec).unwrap()[0];
        assert!(r.alpha < 0.0 && r.residual < 1e-10);
        let (q0, q1) = (m.pair.q0(), m.pair.q1());
        let (mut lo, mut hi) = (r.alpha * 1.5, r.alpha * 0.5);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if vb_log_midpoint(q0, q1, 1.0, 0.02, mid) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((oracle - r.alpha).abs() < 1e-6 * r.alpha.abs(), "{oracle} vs {}", r.alpha);
    }

    #[test]
    fn tiny_parameters_stay_representable() {
        let spec = QuadratureSpec::default();
        let m = poly(ModelKind::Hp, 0.0);
        let r = solve_alpha(&m, 1e-3, &spec).unwrap()[0];
        assert!(r.ln_offset < -500.0 && r.residual < 1e-10);
        let b = m.analytic_alpha_bracket(1e-3).unwrap();
        assert!(r.ln_offset < b.offset_hi);
    }

    #[test]
    fn vp_two_roots_for_large_delta() {
        let spec = QuadratureSpec::default();
        let m = poly(ModelKind::Vp, 2.0);
        let roots = solve_alpha(&m, 1e-3, &spec).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].branch, Branch::NearZero);
        assert_eq!(roots[1].branch, Branch::Divergent);
        assert!(roots[0].alpha > roots[1].alpha);
        let smaller = solve_alpha(&m, 5e-4, &spec).unwrap();
        assert!(smaller[1].alpha < roots[1].alpha);
        assert!(smaller[0].alpha.abs() < roots[0].alpha.abs());
        assert!(matches!(solve_alpha(&m, 1e3, &spec), Err(Error::NoRootInDomain)));
    }

    #[test]
    fn vp_single_root_for_small_delta() {
        let spec = QuadratureSpec::default();
        for delta in [0.5, 1.0] {
            let m = poly(ModelKind::Vp, delta);
            for mu in [1e-2, 1e-3] {
                let roots = solve_alpha(&m, mu, &spec).unwrap();
                assert_eq!(roots.len(), 1);
                assert!(roots[0].residual < 1e-10);
            }
        }
    }

    #[test]
    fn scan_shapes() {
        let spec = QuadratureSpec::default();
        let grid: Vec<f64> = (-8..=8).map(|k| -(10f64).powi(k)).collect();
        let j = scan_j(&poly(ModelKind::Vp, 0.5), &grid[8..], &spec).unwrap();
        assert!(j.windows(2).all(|w| w[1] < w[0]));
        let j2 = scan_j(&poly(ModelKind::Vp, 2.0), &grid[4..13], &spec).unwrap();
        let (imin, _) =
            j2.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!(imin > 0 && imin < j2.len() - 1);
    }

    #[test]
    fn root_stable_under_tolerance() {
        let m = vb(2.0);
        let a = solve_alpha(&m, 0.01, &QuadratureSpec::default()).unwrap()[0];
        let b = solve_alpha(&m, 0.01, &QuadratureSpec::default().with_rel_tol(5e-13)).unwrap()[0];
        assert!((a.ln_offset - b.ln_offset).abs() < 1e-9);
    }
}
