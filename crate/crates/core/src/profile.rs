//! Spatial profiles: inversion of `X(w)` on a uniform grid, physical fields,
//! and an independent shooting solution used to cross-check both.

use serde::Serialize;

use crate::alpha::{AlphaRoot, Branch, ALPHA_CAP};
use crate::chart::Charts;
use crate::error::{Error, Result};
use crate::model::{End, ModelKind, Orientation, ReducedModel};
use crate::ode::{DormandPrince, Tolerances};
use crate::quad::QuadratureSpec;

/// Smallest parameter for which the shooting oracle is run.
pub const ORACLE_PARAM_CUTOFF: f64 = 1e-3;

const MAX_SHOTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub x: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalSample {
    pub x: f64,
    pub u: f64,
    pub rho: f64,
    pub p: f64,
    /// Temperature `p u / R`; only the VP model reconstructs it.
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub model: ModelKind,
    pub param: f64,
    pub alpha: AlphaRoot,
    pub samples: Vec<Sample>,
    pub physical: Vec<PhysicalSample>,
    /// `X((w_in + w_out)/2)`.
    pub midpoint_x: f64,
}

impl Profile {
    pub fn max_pressure(&self) -> f64 {
        self.physical.iter().map(|s| s.p).fold(f64::NEG_INFINITY, f64::max)
    }

    /// First violation of monotonicity in the model's orientation, if any.
    pub fn monotonicity_violation(&self, orientation: Orientation) -> Option<f64> {
        first_violation(&self.samples, orientation)
    }
}

fn first_violation(samples: &[Sample], orientation: Orientation) -> Option<f64> {
    samples.windows(2).find_map(|p| {
        let ok = match orientation {
            Orientation::Increasing => p[1].w >= p[0].w,
            Orientation::Decreasing => p[1].w <= p[0].w,
        };
        (!ok || p[1].x <= p[0].x).then_some(p[1].x)
    })
}

fn uniform_grid(n: usize) -> Result<Vec<f64>> {
    if n < 16 {
        return Err(Error::InvalidInput(format!("at least 16 samples are required, got {n}")));
    }
    Ok((0..n).map(|j| j as f64 / (n - 1) as f64).collect())
}

/// Position on one of the two log charts; `t = -inf` is the end itself.
#[derive(Debug, Clone, Copy)]
struct Pos {
    end: End,
    t: f64,
}

fn lift(model: &ReducedModel, z: f64, x: f64, pos: Pos) -> (Sample, PhysicalSample) {
    let h = pos.t.exp();
    let w = model.w_at(pos.end, h);
    let g = model.gamma();
    let (u, p, temperature) = match model.kind {
        ModelKind::Hb => {
            let u = w.powf(1.0 / (1.0 - g));
            (u, u.powf(-g), None)
        }
        ModelKind::Hp => (model.pair.momentum - w, w, None),
        ModelKind::Vb => (w, w.powf(-g), None),
        ModelKind::Vp => {
            let p = model.vp_pressure_at(pos.end, h, z);
            (w, p, Some(p * w / model.pair.law.gas_constant))
        }
    };
    (Sample { x, w }, PhysicalSample { x, u, rho: 1.0 / u, p, temperature })
}

fn assemble(
    model: &ReducedModel,
    param: f64,
    alpha: AlphaRoot,
    grid: &[f64],
    positions: &[Pos],
    midpoint_x: f64,
) -> Result<Profile> {
    let (samples, physical): (Vec<_>, Vec<_>) = grid
        .iter()
        .zip(positions)
        .map(|(&x, &pos)| lift(model, alpha.ln_offset, x, pos))
        .unzip();
    if let Some(x) = first_violation(&samples, model.orientation) {
        return Err(Error::NonMonotoneSamples { x });
    }
    Ok(Profile { model: model.kind, param, alpha, samples, physical, midpoint_x })
}

/// Profile on `n_samples` uniformly spaced points of `[0, 1]`.
pub fn reconstruct(
    model: &ReducedModel,
    param: f64,
    root: &AlphaRoot,
    n_samples: usize,
    spec: &QuadratureSpec,
) -> Result<Profile> {
    let grid = uniform_grid(n_samples)?;
    match reconstruct_once(model, param, root, &grid, spec) {
        Err(Error::NonMonotoneSamples { .. }) => {
            let finer = spec.with_rel_tol(spec.rel_tol * 0.01);
            reconstruct_once(model, param, root, &grid, &finer)
        }
        other => other,
    }
}

fn reconstruct_once(
    model: &ReducedModel,
    param: f64,
    root: &AlphaRoot,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Profile> {
    let charts = Charts::build(model, param, root.ln_offset, spec)?;
    let last = grid.len() - 1;
    let positions: Vec<Pos> = grid
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if j == 0 {
                Pos { end: End::Inflow, t: f64::NEG_INFINITY }
            } else if j == last {
                Pos { end: End::Outflow, t: f64::NEG_INFINITY }
            } else {
                let (end, t) = charts.invert(x);
                Pos { end, t }
            }
        })
        .collect();
    let midpoint_x = charts.x_of_w(model.w_mid());
    assemble(model, param, *root, grid, &positions, midpoint_x)
}

/// `X(w) / (1 - X(w))`, with both parts integrated from their own end.
pub fn ratio_i(
    model: &ReducedModel,
    param: f64,
    root: &AlphaRoot,
    w: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (lo, hi) = (model.w_in.min(model.w_out), model.w_in.max(model.w_out));
    if !(w > lo && w < hi) {
        return Err(Error::InvalidInput(format!("w = {w} is not strictly inside ({lo}, {hi})")));
    }
    let charts = Charts::build(model, param, root.ln_offset, spec)?;
    let (left, right) = charts.split_at(w);
    if right < 1e-14 {
        return Err(Error::RatioOverflow);
    }
    Ok(left / right)
}

/// Refined constant and profile from the shooting solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotResult {
    pub alpha: f64,
    pub ln_offset: f64,
    /// `|x_end - 1|` at the accepted shot.
    pub terminal_mismatch: f64,
    pub shots: usize,
    pub profile: Profile,
}

/// Linearization `|F|/weight ≈ c + s h` at an end, with `c` split as
/// `c_coef * e^z` except for HB where `c = alpha`.
struct EndModel {
    s: f64,
    c_coef: f64,
    hb_alpha: Option<f64>,
}

impl EndModel {
    fn new(model: &ReducedModel, end: End, z: f64) -> Self {
        let w = model.w_at(end, 0.0);
        let slope = model.slope(end, 0.0);
        match model.kind {
            ModelKind::Hb => {
                Self { s: -slope, c_coef: 0.0, hb_alpha: Some(model.alpha_from_offset(z)) }
            }
            ModelKind::Hp | ModelKind::Vb => {
                let weight = model.weight(w).unwrap_or(1.0);
                Self { s: slope / weight, c_coef: 1.0 / weight, hb_alpha: None }
            }
            ModelKind::Vp => {
                let (_, g1, _, _) = model.vp_parts(w);
                let d = model.vp_denominator(end, 0.0, z).powf(model.delta);
                Self { s: slope / d, c_coef: g1 / d, hb_alpha: None }
            }
        }
    }

    /// Replace the slope by the secant through the density at `t`, which
    /// absorbs the variation of the `alpha` terms across the tail.
    fn refit(&mut self, model: &ReducedModel, end: End, t: f64, z: f64) {
        if self.hb_alpha.is_none() {
            self.s = 1.0 / model.density(end, t, z) - self.c_coef * (z - t).exp();
        }
    }

    /// `s h / c` at `h = e^t`.
    fn ratio(&self, t: f64, z: f64) -> f64 {
        match self.hb_alpha {
            Some(a) => self.s * t.exp() / a,
            None => self.s / self.c_coef * (t - z).exp(),
        }
    }

    /// `x` covered between the end and `h = e^t` under the linear model.
    fn x_span(&self, scale: f64, t: f64, z: f64) -> f64 {
        scale / self.s * self.ratio(t, z).ln_1p()
    }

    /// Inverse of `x_span`.
    fn t_of_span(&self, scale: f64, dx: f64, z: f64) -> f64 {
        let r = (self.s * dx / scale).exp_m1() / self.s;
        if !(r > 0.0) {
            return f64::NEG_INFINITY;
        }
        match self.hb_alpha {
            Some(a) => (r * a).ln(),
            None => r.ln() + z + self.c_coef.ln(),
        }
    }
}

/// Chart position where the linear endpoint model takes over, deep enough
/// for the linearization to be exact in double precision. Near `x = 1` the
/// tail is kept at least `MIN_TAIL` wide so the stepper can resolve what
/// remains of the layer.
fn layer_edge(model: &ReducedModel, end: End, tail: &EndModel, scale: f64, z: f64) -> f64 {
    const MIN_TAIL: f64 = 1e-9;
    let top = model.chart_len(end).ln();
    let deep = match model.kind {
        ModelKind::Hb => top - 28.0,
        _ => (top - 28.0).min(z - 8.0),
    };
    match end {
        End::Inflow => deep,
        End::Outflow => deep.max(tail.t_of_span(scale, MIN_TAIL, z)).min(top - 1.0),
    }
}

struct Shot {
    x_end: f64,
    positions: Vec<Pos>,
}

/// Integrate `dt/dx = 1 / (scale * dX/dt)` from the inflow end to the outflow
/// end, switching charts at the split point, and record chart positions at
/// the `grid` abscissae.
fn shoot(
    model: &ReducedModel,
    param: f64,
    z: f64,
    tol: Tolerances,
    grid: &[f64],
) -> Result<Shot> {
    let scale = model.scale(param);
    let mut in_model = EndModel::new(model, End::Inflow, z);
    let mut out_model = EndModel::new(model, End::Outflow, z);
    let t_start = layer_edge(model, End::Inflow, &in_model, scale, z);
    let tau_stop = layer_edge(model, End::Outflow, &out_model, scale, z);
    in_model.refit(model, End::Inflow, t_start, z);
    out_model.refit(model, End::Outflow, tau_stop, z);
    let x_start = in_model.x_span(scale, t_start, z);
    if !(x_start.is_finite() && x_start > 0.0) {
        return Err(Error::ShootingDiverged(format!("invalid start offset {x_start}")));
    }
    let mut positions = Vec::with_capacity(grid.len());
    let mut gi = 0;
    while gi < grid.len() && grid[gi] < x_start {
        let t = in_model.t_of_span(scale, grid[gi], z);
        positions.push(Pos { end: End::Inflow, t });
        gi += 1;
    }

    // inflow chart, y = t increasing up to the split point
    let t_split = model.chart_len(End::Inflow).ln();
    let rate_in = |_x: f64, t: f64| 1.0 / (scale * model.density(End::Inflow, t, z));
    let h0 = 0.1 * x_start;
    let mut dp = DormandPrince::new(rate_in, x_start, t_start, h0, tol);
    let x_split = loop {
        let x_max = grid.get(gi).copied().unwrap_or(f64::INFINITY).min(4.0);
        if let Some(x) = dp.advance_to_level(t_split, x_max)? {
            break x;
        }
        if gi >= grid.len() {
            return Err(Error::ShootingDiverged("split point not reached".into()));
        }
        positions.push(Pos { end: End::Inflow, t: dp.y });
        gi += 1;
    };

    // outflow chart, y = -tau increasing as the outflow end is approached
    let rate_out = |_x: f64, y: f64| 1.0 / (scale * model.density(End::Outflow, -y, z));
    let tau_split = model.chart_len(End::Outflow).ln();
    let h1 = dp.h;
    let mut dp = DormandPrince::new(rate_out, x_split, -tau_split, h1, tol);
    let x_stop = loop {
        let x_max = grid.get(gi).copied().unwrap_or(f64::INFINITY).min(4.0);
        if let Some(x) = dp.advance_to_level(-tau_stop, x_max)? {
            break x;
        }
        if gi >= grid.len() {
            return Err(Error::ShootingDiverged("outflow layer not reached".into()));
        }
        positions.push(Pos { end: End::Outflow, t: -dp.y });
        gi += 1;
    };
    let x_end = x_stop + out_model.x_span(scale, tau_stop, z);
    while gi < grid.len() {
        let t = out_model.t_of_span(scale, x_end - grid[gi], z);
        positions.push(Pos { end: End::Outflow, t });
        gi += 1;
    }
    Ok(Shot { x_end, positions })
}

/// Shooting solution of the first-order profile equation with a secant
/// iteration on `alpha` (in the offset coordinate) for `x_end = 1`.
pub fn shoot_ivp_oracle(
    model: &ReducedModel,
    param: f64,
    guess_ln_offset: f64,
    branch: Branch,
    integrator_tol: f64,
    n_samples: usize,
) -> Result<ShotResult> {
    if !(param >= ORACLE_PARAM_CUTOFF * (1.0 - 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "parameter {param} is below the shooting cutoff {ORACLE_PARAM_CUTOFF}"
        )));
    }
    if !(integrator_tol > 0.0 && integrator_tol < 1e-3) {
        return Err(Error::InvalidInput(format!("integrator tolerance {integrator_tol} out of range")));
    }
    let grid = uniform_grid(n_samples)?;
    let tol = Tolerances { rtol: integrator_tol, atol: integrator_tol };
    let terminal_tol = 100.0 * integrator_tol;
    let mismatch = |z: f64| -> Result<f64> { Ok(shoot(model, param, z, tol, &[])?.x_end - 1.0) };

    let mut shots = 1;
    let mut best = (guess_ln_offset, mismatch(guess_ln_offset)?);
    let shoot_at = |z: f64, shots: &mut usize| -> Result<(f64, f64)> {
        let domain_ok = model.alpha_from_offset(z).is_finite() && z < ALPHA_CAP.ln();
        if !domain_ok {
            return Err(Error::ShootingDiverged(format!("iterate left the domain at offset {z}")));
        }
        *shots += 1;
        Ok((z, mismatch(z)?))
    };
    if best.1.abs() > terminal_tol {
        // secant steps until the mismatch changes sign, then Illinois
        let mut a = best;
        let step = 1e-3 * (1.0 + a.0.abs());
        let mut b = shoot_at(if a.1 > 0.0 { a.0 + step } else { a.0 - step }, &mut shots)?;
        while (a.1 > 0.0) == (b.1 > 0.0) {
            if b.1.abs() < best.1.abs() {
                best = b;
            }
            if best.1.abs() <= terminal_tol || shots >= MAX_SHOTS {
                break;
            }
            let secant = b.0 - b.1 * (b.0 - a.0) / (b.1 - a.1);
            if !secant.is_finite() {
                return Err(Error::ShootingDiverged("flat terminal mismatch".into()));
            }
            let limit = 2.0 * (1.0 + b.0.abs());
            a = b;
            b = shoot_at(secant.clamp(b.0 - limit, b.0 + limit), &mut shots)?;
        }
        let mut side = 0;
        while best.1.abs() > terminal_tol && shots < MAX_SHOTS {
            if b.1.abs() < best.1.abs() {
                best = b;
            }
            if best.1.abs() <= terminal_tol || (a.0 - b.0).abs() <= 1e-15 * (1.0 + b.0.abs()) {
                break;
            }
            let next = (a.0 * b.1 - b.0 * a.1) / (b.1 - a.1);
            let c = shoot_at(next, &mut shots)?;
            if (c.1 > 0.0) == (b.1 > 0.0) {
                if side == 1 {
                    a.1 *= 0.5;
                }
                side = 1;
            } else {
                if side == -1 {
                    b.1 *= 0.5;
                }
                side = -1;
                a = b;
            }
            b = c;
            if c.1.abs() < best.1.abs() {
                best = c;
            }
        }
        if best.1.abs() > 1e3 * terminal_tol {
            return Err(Error::ShootingDiverged(format!(
                "terminal mismatch {} after {shots} shots",
                best.1
            )));
        }
    }

    let z = best.0;
    let shot = shoot(model, param, z, tol, &grid)?;
    let alpha = model.alpha_from_offset(z);
    let root = AlphaRoot {
        alpha,
        ln_offset: z,
        residual: best.1.abs(),
        bracket: (alpha, alpha),
        ln_bracket: (z, z),
        branch,
        evaluations: shots,
    };
    let mut positions = shot.positions;
    positions[0] = Pos { end: End::Inflow, t: f64::NEG_INFINITY };
    let last = positions.len() - 1;
    positions[last] = Pos { end: End::Outflow, t: f64::NEG_INFINITY };
    let midpoint_x = midpoint_from_samples(model, &grid, &positions);
    let profile = assemble(model, param, root, &grid, &positions, midpoint_x)?;
    Ok(ShotResult { alpha, ln_offset: z, terminal_mismatch: best.1.abs(), shots, profile })
}

/// Linear interpolation of the crossing of `w_mid` in the sampled profile.
fn midpoint_from_samples(model: &ReducedModel, grid: &[f64], positions: &[Pos]) -> f64 {
    let target = model.w_mid();
    let w: Vec<f64> = positions.iter().map(|p| model.w_at(p.end, p.t.exp())).collect();
    let sign = match model.orientation {
        Orientation::Increasing => 1.0,
        Orientation::Decreasing => -1.0,
    };
    for k in 1..w.len() {
        if sign * (w[k] - target) >= 0.0 {
            let (a, b) = (w[k - 1], w[k]);
            let frac = if b != a { (target - a) / (b - a) } else { 0.0 };
            return grid[k - 1] + frac * (grid[k] - grid[k - 1]);
        }
    }
    1.0
}

/// Largest `|w_a - w_b|` over two profiles sampled on the same grid.
pub fn linf_gap(a: &Profile, b: &Profile) -> Result<f64> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::InvalidInput("profiles are sampled on different grids".into()));
    }
    Ok(a.samples.iter().zip(&b.samples).map(|(p, q)| (p.w - q.w).abs()).fold(0.0, f64::max))
}
