//! The four dissipative reductions written as one scalar problem
//! `dX/dw = scale * weight(w) / F(w, alpha)` on the interval between the
//! shock states.
//!
//! Near-endpoint arithmetic is done relative to the closest endpoint so that
//! `f` vanishes exactly there and stays accurate at offsets far below the
//! spacing of doubles around `w_in`/`w_out`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{Jump, ShockPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Heat-conductive, barotropic.
    #[serde(rename = "HB")]
    Hb,
    /// Heat-conductive, polytropic.
    #[serde(rename = "HP")]
    Hp,
    /// Viscous with `mu T^delta`, barotropic.
    #[serde(rename = "VB")]
    Vb,
    /// Viscous with `mu T^delta`, polytropic.
    #[serde(rename = "VP")]
    Vp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Hb, ModelKind::Hp, ModelKind::Vb, ModelKind::Vp];

    pub fn jump(self) -> Jump {
        match self {
            ModelKind::Hb => Jump::MassBernoulli,
            ModelKind::Vb => Jump::MassMomentum,
            ModelKind::Hp | ModelKind::Vp => Jump::FullEuler,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Hb => "HB",
            ModelKind::Hp => "HP",
            ModelKind::Vb => "VB",
            ModelKind::Vp => "VP",
        }
    }

    pub fn is_barotropic(self) -> bool {
        matches!(self, ModelKind::Hb | ModelKind::Vb)
    }

    /// Name of the profile variable `w`.
    pub fn variable(self) -> &'static str {
        match self {
            ModelKind::Hb => "v",
            ModelKind::Hp => "p",
            ModelKind::Vb | ModelKind::Vp => "u",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HB" => Ok(ModelKind::Hb),
            "HP" => Ok(ModelKind::Hp),
            "VB" => Ok(ModelKind::Vb),
            "VP" => Ok(ModelKind::Vp),
            _ => Err(Error::InvalidInput(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// One of the two ends of the profile interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum End {
    /// `x = 0`, `w = w_in`.
    Inflow,
    /// `x = 1`, `w = w_out`.
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub w_star: f64,
    pub f_star: f64,
}

/// Interval guaranteed to contain every root of `H(alpha) = 1`.
///
/// `offset_lo..offset_hi` is the same interval in the solver coordinate
/// (see [`ReducedModel::offset_from_alpha`]); it stays finite when the
/// `alpha` values themselves underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBracket {
    pub lo: f64,
    pub hi: f64,
    pub offset_lo: f64,
    pub offset_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedModel {
    pub kind: ModelKind,
    pub pair: ShockPair,
    pub delta: f64,
    pub w_in: f64,
    pub w_out: f64,
    pub orientation: Orientation,
    gamma: f64,
    span: f64,
    split: f64,
    /// `alpha` at which the flux touches zero inside the interval (HB) or at
    /// the endpoints (others).
    anchor: f64,
    // HB: exponent 2/(1-gamma), gamma/(gamma-1), v*
    hb_a: f64,
    hb_k: f64,
    v_star: f64,
}

/// `(1 + x)^a - 1` without cancellation.
pub(crate) fn pm1(x: f64, a: f64) -> f64 {
    (a * x.ln_1p()).exp_m1()
}

/// `((1 + x)^a - 1) / x`, continuous at `x = 0`.
pub(crate) fn pm1_over(x: f64, a: f64) -> f64 {
    if x.abs() < 1e-200 {
        a + 0.5 * a * (a - 1.0) * x
    } else {
        pm1(x, a) / x
    }
}

impl ReducedModel {
    pub fn new(kind: ModelKind, pair: ShockPair, delta: f64) -> Result<Self> {
        if pair.jump != kind.jump() {
            return Err(Error::InvalidInput(format!(
                "model {kind} needs a {:?} shock pair, got {:?}",
                kind.jump(),
                pair.jump
            )));
        }
        let delta = match kind {
            ModelKind::Hb | ModelKind::Hp => 0.0,
            ModelKind::Vb | ModelKind::Vp => {
                if !(delta >= 0.0) || !delta.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "delta must be non-negative, got {delta}"
                    )));
                }
                delta
            }
        };
        let g = pair.gamma();
        let (q0, q1) = (pair.q0(), pair.q1());
        let hb_a = 2.0 / (1.0 - g);
        let hb_k = g / (g - 1.0);
        let v_star = g.powf((1.0 - g) / (1.0 + g));
        let (w_in, w_out, orientation) = match kind {
            ModelKind::Hb => (q0.powf(1.0 - g), q1.powf(1.0 - g), Orientation::Increasing),
            ModelKind::Hp => (pair.p0(), pair.p1(), Orientation::Increasing),
            ModelKind::Vb | ModelKind::Vp => (q0, q1, Orientation::Decreasing),
        };
        if kind == ModelKind::Hp {
            let margin = pair.momentum - 2.0 * pair.p1();
            if !(margin > 0.0) {
                return Err(Error::DegenerateWeight { margin });
            }
        }
        let span = (w_out - w_in).abs();
        let mut model = Self {
            kind,
            pair,
            delta,
            w_in,
            w_out,
            orientation,
            gamma: g,
            span,
            split: 0.5 * span,
            anchor: 0.0,
            hb_a,
            hb_k,
            v_star,
        };
        if kind == ModelKind::Hb {
            if !(w_in < v_star && v_star < w_out) {
                return Err(Error::InvalidInput("v* does not separate v0 and v1".into()));
            }
            model.split = v_star - w_in;
            model.anchor = -model.endpoint_f(End::Inflow, model.split);
        }
        Ok(model)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `|w_out - w_in|`.
    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn w_mid(&self) -> f64 {
        0.5 * (self.w_in + self.w_out)
    }

    /// Multiplier of `weight / F` in `dX/dw`; `param` is `kappa` for HB/HP and
    /// `mu` for VB/VP.
    pub fn scale(&self, param: f64) -> f64 {
        match self.kind {
            ModelKind::Vp => {
                param * ((self.gamma - 1.0) / self.pair.law.gas_constant).powf(self.delta)
            }
            _ => param,
        }
    }

    /// Open interval of admissible `alpha`.
    pub fn alpha_domain(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::Hb => (self.anchor, f64::INFINITY),
            ModelKind::Hp => (0.0, f64::INFINITY),
            ModelKind::Vb | ModelKind::Vp => (f64::NEG_INFINITY, 0.0),
        }
    }

    /// Finite end of the admissible domain: `-f(v*)` for HB, 0 otherwise.
    pub fn alpha_anchor(&self) -> f64 {
        self.anchor
    }

    fn offset_sign(&self) -> f64 {
        match self.kind {
            ModelKind::Hb | ModelKind::Hp => 1.0,
            ModelKind::Vb | ModelKind::Vp => -1.0,
        }
    }

    /// `alpha = anchor ± exp(z)`, the inverse of [`Self::offset_from_alpha`].
    pub fn alpha_from_offset(&self, z: f64) -> f64 {
        self.anchor + self.offset_sign() * z.exp()
    }

    /// Solver coordinate `z = ln|alpha - anchor|`.
    pub fn offset_from_alpha(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        Ok((alpha - self.anchor).abs().ln())
    }

    pub fn check_alpha(&self, alpha: f64) -> Result<()> {
        let (lo, hi) = self.alpha_domain();
        if alpha > lo && alpha < hi {
            Ok(())
        } else {
            Err(Error::AlphaOutOfDomain { alpha, lo, hi })
        }
    }

    pub fn critical_point(&self) -> CriticalPoint {
        let w_star = match self.kind {
            ModelKind::Hb => self.v_star,
            ModelKind::Hp => self.w_mid(),
            ModelKind::Vb => self.gamma.powf(1.0 / (1.0 + self.gamma)),
            ModelKind::Vp => (self.pair.q0() * self.pair.q1()).sqrt(),
        };
        let f_star = match self.kind {
            ModelKind::Hb => -self.anchor,
            _ => self.f(w_star).unwrap_or(f64::NAN),
        };
        CriticalPoint { w_star, f_star }
    }

    fn check_range(&self, w: f64) -> Result<()> {
        let (lo, hi) = (self.w_in.min(self.w_out), self.w_in.max(self.w_out));
        if w >= lo && w <= hi {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("w = {w} lies outside [{lo}, {hi}]")))
        }
    }

    /// Nearest endpoint and the distance to it.
    pub(crate) fn locate(&self, w: f64) -> (End, f64) {
        let d_in = (w - self.w_in).abs();
        let d_out = (w - self.w_out).abs();
        if d_in <= d_out {
            (End::Inflow, d_in)
        } else {
            (End::Outflow, d_out)
        }
    }

    /// Point at distance `h` from the given end, towards the other end.
    pub(crate) fn w_at(&self, end: End, h: f64) -> f64 {
        let s = match self.orientation {
            Orientation::Increasing => 1.0,
            Orientation::Decreasing => -1.0,
        };
        match end {
            End::Inflow => self.w_in + s * h,
            End::Outflow => self.w_out - s * h,
        }
    }

    /// Length of the log chart attached to `end`; the charts meet at `v*` for
    /// HB and at the midpoint otherwise.
    pub(crate) fn chart_len(&self, end: End) -> f64 {
        match end {
            End::Inflow => self.split,
            End::Outflow => self.span - self.split,
        }
    }

    /// `f` (or `f1` for VP) at distance `h` from `end`.
    pub(crate) fn endpoint_f(&self, end: End, h: f64) -> f64 {
        match self.kind {
            ModelKind::Hp => self.slope(end, h) * h,
            _ => -self.slope(end, h) * h,
        }
    }

    /// `|f(w)| / h` at distance `h` from `end`, accurate as `h -> 0`.
    pub(crate) fn slope(&self, end: End, h: f64) -> f64 {
        let g = self.gamma;
        let l = self.span;
        match self.kind {
            ModelKind::Hb => {
                let (a, k) = (self.hb_a, self.hb_k);
                match end {
                    End::Inflow => {
                        let v0 = self.w_in;
                        -(0.5 * v0.powf(a - 1.0) * pm1_over(h / v0, a) + k)
                    }
                    End::Outflow => {
                        let v1 = self.w_out;
                        0.5 * v1.powf(a - 1.0) * pm1_over(-h / v1, a) + k
                    }
                }
            }
            ModelKind::Hp => 0.5 * (g + 1.0) / (g - 1.0) * (l - h),
            ModelKind::Vb => match end {
                End::Inflow => {
                    let q0 = self.w_in;
                    1.0 + q0.powf(-g - 1.0) * pm1_over(-h / q0, -g)
                }
                End::Outflow => {
                    let q1 = self.w_out;
                    -1.0 - q1.powf(-g - 1.0) * pm1_over(h / q1, -g)
                }
            },
            ModelKind::Vp => {
                let u = self.w_at(end, h);
                0.5 * (g + 1.0) * (l - h) / u
            }
        }
    }

    /// The jump function `f` (HB/HP/VB) or `f1` (VP).
    pub fn f(&self, w: f64) -> Result<f64> {
        self.check_range(w)?;
        let (end, h) = self.locate(w);
        Ok(self.endpoint_f(end, h))
    }

    /// `f'(w)`, closed form.
    pub fn f_prime(&self, w: f64) -> f64 {
        let g = self.gamma;
        match self.kind {
            ModelKind::Hb => 0.5 * self.hb_a * w.powf(self.hb_a - 1.0) + self.hb_k,
            ModelKind::Hp => {
                let (p0, p1) = (self.pair.p0(), self.pair.p1());
                0.5 * (g + 1.0) / (g - 1.0) * (p0 + p1 - 2.0 * w)
            }
            ModelKind::Vb => 1.0 - g * w.powf(-g - 1.0),
            ModelKind::Vp => {
                let (q0, q1) = (self.pair.q0(), self.pair.q1());
                0.5 * (g + 1.0) * (1.0 - q0 * q1 / (w * w))
            }
        }
    }

    /// Excess of `g(v)` over its minimum `g(v*)`, HB only.
    fn hb_excess(&self, v: f64) -> f64 {
        let vs = self.v_star;
        let e = v - vs;
        0.5 * vs.powf(self.hb_a) * pm1(e / vs, self.hb_a) + self.hb_k * e
    }

    /// `(f1, g1, f2, g2)` of the VP reduction at velocity `u`.
    pub fn vp_parts(&self, u: f64) -> (f64, f64, f64, f64) {
        let g = self.gamma;
        let (q0, p_mom, phi) = (self.pair.q0(), self.pair.momentum, self.pair.bernoulli);
        let f1 = 0.5 * (g + 1.0) * u - g * p_mom + (g - 1.0) * phi / u;
        let g1 = g - (g - 1.0) * q0 / u;
        let f2 = 0.5 * u * u - p_mom * u + phi;
        let g2 = u - q0;
        (f1, g1, f2, g2)
    }

    /// Signed flux `F(w, alpha)`.
    pub fn flux(&self, w: f64, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        let f = self.f(w)?;
        match self.kind {
            ModelKind::Vp => {
                let (_, g1, f2, g2) = self.vp_parts(w);
                let d = f2 + alpha * g2;
                if !(d > 0.0) {
                    return Err(Error::NonphysicalPressure { p: (self.gamma - 1.0) * d / w });
                }
                Ok((f + alpha * g1) / d.powf(self.delta))
            }
            _ => Ok(f + alpha),
        }
    }

    /// Weight multiplying `1/F` in `dX/dw`.
    pub fn weight(&self, w: f64) -> Result<f64> {
        self.check_range(w)?;
        Ok(match self.kind {
            ModelKind::Hb | ModelKind::Vp => 1.0,
            ModelKind::Hp => {
                let margin = self.pair.momentum - 2.0 * self.pair.p1();
                if !(margin > 0.0) {
                    return Err(Error::DegenerateWeight { margin });
                }
                self.pair.momentum - 2.0 * w
            }
            ModelKind::Vb => w.powf(-self.delta),
        })
    }

    fn require_vp(&self) -> Result<()> {
        if self.kind == ModelKind::Vp {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("pressure closure is defined for VP, not {}", self.kind)))
        }
    }

    /// Pressure along a VP profile, `(gamma-1)(u/2 - P0 + Phi0/u + alpha(1 - q0/u))`.
    pub fn vp_pressure(&self, u: f64, alpha: f64) -> Result<f64> {
        self.require_vp()?;
        if alpha > 0.0 {
            return Err(Error::AlphaOutOfDomain { alpha, lo: f64::NEG_INFINITY, hi: 0.0 });
        }
        let (_, _, f2, g2) = self.vp_parts(u);
        let p = (self.gamma - 1.0) * (f2 + alpha * g2) / u;
        if p > 0.0 {
            Ok(p)
        } else {
            Err(Error::NonphysicalPressure { p })
        }
    }

    /// Pressure written in terms of the offset coordinate, exact at both ends.
    pub(crate) fn vp_pressure_at(&self, end: End, h: f64, z: f64) -> f64 {
        let u = self.w_at(end, h);
        (self.gamma - 1.0) * self.vp_denominator(end, h, z) / u
    }

    /// `T = p u / R`.
    pub fn vp_temperature(&self, u: f64, alpha: f64) -> Result<f64> {
        Ok(self.vp_pressure(u, alpha)? * u / self.pair.law.gas_constant)
    }

    /// `f2 + |alpha| |g2|` with `|alpha| = exp(z)`.
    pub(crate) fn vp_denominator(&self, end: End, h: f64, z: f64) -> f64 {
        let u = self.w_at(end, h);
        let f2 = 0.5 * u * u - self.pair.momentum * u + self.pair.bernoulli;
        let g2_abs = match end {
            End::Inflow => h,
            End::Outflow => self.span - h,
        };
        f2 + z.exp() * g2_abs
    }

    /// Unscaled `dX/dt` on the log chart at `end`, where `h = exp(t)` is the
    /// distance to the end and `z` the offset coordinate of `alpha`.
    pub(crate) fn density(&self, end: End, t: f64, z: f64) -> f64 {
        let h = t.exp();
        let w = self.w_at(end, h);
        match self.kind {
            ModelKind::Hb => h / (self.hb_excess(w) + z.exp()),
            ModelKind::Hp => {
                (self.pair.momentum - 2.0 * w) / (self.slope(end, h) + (z - t).exp())
            }
            ModelKind::Vb => w.powf(-self.delta) / (self.slope(end, h) + (z - t).exp()),
            ModelKind::Vp => {
                let g1 = self.gamma - (self.gamma - 1.0) * self.pair.q0() / w;
                let d = self.vp_denominator(end, h, z);
                d.powf(self.delta) / (self.slope(end, h) + (z - t).exp() * g1)
            }
        }
    }

    /// Limit of `density` deep inside the endpoint layer with `alpha -> 0`:
    /// `weight(w_e) / |f'(w_e)|`. Not meaningful for HB.
    pub(crate) fn plateau_density(&self, end: End) -> f64 {
        let w = self.w_at(end, 0.0);
        let s = self.slope(end, 0.0);
        match self.kind {
            ModelKind::Hb => 0.0,
            ModelKind::Hp => (self.pair.momentum - 2.0 * w) / s,
            ModelKind::Vb => w.powf(-self.delta) / s,
            ModelKind::Vp => {
                let f2 = 0.5 * w * w - self.pair.momentum * w + self.pair.bernoulli;
                f2.powf(self.delta) / s
            }
        }
    }

    /// Lower cutoff of the log chart; the neglected tail is below `e^-45`
    /// relative to the chart integral.
    pub(crate) fn chart_floor(&self, end: End, z: f64) -> f64 {
        let top = self.chart_len(end).ln();
        match self.kind {
            ModelKind::Hb => top - 45.0,
            _ => top.min(z) - 45.0,
        }
    }

    /// Interval provably containing the roots of `H(alpha) = 1` at `param`.
    pub fn analytic_alpha_bracket(&self, param: f64) -> Result<AlphaBracket> {
        if !(param > 0.0) {
            return Err(Error::InvalidInput(format!("parameter must be positive, got {param}")));
        }
        let l = self.span;
        Ok(match self.kind {
            ModelKind::Hb => {
                // chords of f from v* to each endpoint bound f from above
                let f_star = -self.anchor;
                let s1 = -f_star / (self.v_star - self.w_in);
                let s2 = f_star / (self.v_star - self.w_out);
                let sigma = 1.0 / (param * (1.0 / s1 + 1.0 / s2));
                let offset_lo = self.anchor.ln() - ln_expm1(sigma);
                let offset_hi = (param * l).ln();
                AlphaBracket {
                    lo: self.alpha_from_offset(offset_lo),
                    hi: self.anchor + param * l,
                    offset_lo,
                    offset_hi,
                }
            }
            ModelKind::Hp => {
                let a = self.pair.momentum;
                let s = 0.5 * (self.gamma + 1.0) / (self.gamma - 1.0) * 0.5 * l;
                let e = s / (2.0 * param * a);
                let offset_hi = (0.5 * s * l).ln() - ln_expm1(e);
                AlphaBracket {
                    lo: 0.0,
                    hi: offset_hi.exp(),
                    offset_lo: f64::NEG_INFINITY,
                    offset_hi,
                }
            }
            ModelKind::Vb => {
                let (q0, q1) = (self.pair.q0(), self.pair.q1());
                let u_hat = 0.5 * (q0 + q1);
                let s = self.f(u_hat)? / (u_hat - q0);
                let e = s * q1.powf(self.delta) / (2.0 * param);
                let offset_hi = (0.5 * s * l).ln() - ln_expm1(e);
                AlphaBracket {
                    lo: -offset_hi.exp(),
                    hi: 0.0,
                    offset_lo: f64::NEG_INFINITY,
                    offset_hi,
                }
            }
            ModelKind::Vp => AlphaBracket {
                lo: f64::NEG_INFINITY,
                hi: 0.0,
                offset_lo: f64::NEG_INFINITY,
                offset_hi: f64::INFINITY,
            },
        })
    }
}

/// `ln(e^x - 1)` for `x > 0`.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}
