//! Log-distance charts over the two halves of the profile interval.
//!
//! Each chart covers the points at distance `h = e^t` from one end, up to
//! the split point, and stores the adaptive partition in `t` together with
//! cumulative integrals of `dX/dt` and of `h dX/dt`. Everything downstream
//! (H, profile inversion, L1 distances) reads from these partitions.

use crate::error::{Error, Result};
use crate::model::{End, ReducedModel};
use crate::quad::{gk21, integrate, QuadratureSpec};

#[derive(Debug, Clone)]
pub(crate) struct Chart {
    pub len: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub nodes: Vec<f64>,
    /// Unscaled cumulative `int dX/dt` at each node.
    pub cum: Vec<f64>,
    /// Unscaled cumulative `int h dX/dt` at each node.
    pub mom: Vec<f64>,
}

impl Chart {
    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    pub fn moment_total(&self) -> f64 {
        *self.mom.last().unwrap_or(&0.0)
    }

    fn segment_of(&self, t: f64) -> usize {
        let k = self.nodes.partition_point(|&n| n <= t);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Charts<'m> {
    pub model: &'m ReducedModel,
    pub z: f64,
    pub scale: f64,
    pub inflow: Chart,
    pub outflow: Chart,
}

fn build_chart(model: &ReducedModel, end: End, z: f64, spec: &QuadratureSpec) -> Result<Chart> {
    let len = model.chart_len(end);
    let t_hi = len.ln();
    let t_lo = model.chart_floor(end, z);
    let n = (((t_hi - t_lo) / 4.0).ceil() as usize).max(4);
    let mut breaks: Vec<f64> =
        (0..=n).map(|i| t_lo + (t_hi - t_lo) * i as f64 / n as f64).collect();
    if z > t_lo && z < t_hi {
        breaks.push(z);
    }
    breaks.extend([t_hi - 1e-1, t_hi - 1e-2, t_hi - 1e-3]);
    breaks.retain(|&b| b > t_lo && b < t_hi);
    breaks.extend([t_lo, t_hi]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let density = |t: f64| model.density(end, t, z);
    let adaptive = integrate(&density, &breaks, spec)?;
    let nodes = adaptive.nodes();
    let cum = adaptive.cumulative();
    let weighted = |t: f64| t.exp() * model.density(end, t, z);
    let mut mom = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    mom.push(acc);
    for w in nodes.windows(2) {
        acc += gk21(&weighted, w[0], w[1]).0;
        mom.push(acc);
    }
    Ok(Chart { len, t_lo, t_hi, nodes, cum, mom })
}

impl<'m> Charts<'m> {
    pub fn build(
        model: &'m ReducedModel,
        param: f64,
        z: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("offset coordinate must be finite, got {z}")));
        }
        Ok(Self {
            model,
            z,
            scale: model.scale(param),
            inflow: build_chart(model, End::Inflow, z, spec)?,
            outflow: build_chart(model, End::Outflow, z, spec)?,
        })
    }

    pub fn chart(&self, end: End) -> &Chart {
        match end {
            End::Inflow => &self.inflow,
            End::Outflow => &self.outflow,
        }
    }

    /// `H = X(w_out)`, equal to 1 at a solved `alpha`.
    pub fn h_total(&self) -> f64 {
        self.scale * (self.inflow.total() + self.outflow.total())
    }

    fn density(&self, end: End, t: f64) -> f64 {
        self.model.density(end, t, self.z)
    }

    /// Unscaled cumulative integral from the chart floor up to `t`.
    pub fn cum_at(&self, end: End, t: f64) -> f64 {
        let c = self.chart(end);
        if t <= c.t_lo {
            return 0.0;
        }
        if t >= c.t_hi {
            return c.total();
        }
        let k = c.segment_of(t);
        c.cum[k] + gk21(&|s| self.density(end, s), c.nodes[k], t).0
    }

    /// Unscaled `int h dX/dt` from the chart floor up to `t`.
    pub fn mom_at(&self, end: End, t: f64) -> f64 {
        let c = self.chart(end);
        if t <= c.t_lo {
            return 0.0;
        }
        if t >= c.t_hi {
            return c.moment_total();
        }
        let k = c.segment_of(t);
        c.mom[k] + gk21(&|s| s.exp() * self.density(end, s), c.nodes[k], t).0
    }

    /// `(X(w), H - X(w))`, each computed on the chart that contains `w` so the
    /// smaller of the two keeps full relative accuracy.
    pub fn split_at(&self, w: f64) -> (f64, f64) {
        let m = self.model;
        let h_in = (w - m.w_in).abs();
        let total = self.h_total();
        if h_in <= m.chart_len(End::Inflow) {
            let left = if h_in == 0.0 { 0.0 } else { self.scale * self.cum_at(End::Inflow, h_in.ln()) };
            let right = self.scale
                * (self.inflow.total() - self.cum_at(End::Inflow, h_in.ln()) + self.outflow.total());
            (left, if h_in == 0.0 { total } else { right })
        } else {
            let r = (m.w_out - w).abs();
            let right = if r == 0.0 { 0.0 } else { self.scale * self.cum_at(End::Outflow, r.ln()) };
            let left = self.scale
                * (self.inflow.total() + self.outflow.total() - self.cum_at(End::Outflow, r.ln()));
            (if r == 0.0 { total } else { left }, right)
        }
    }

    pub fn x_of_w(&self, w: f64) -> f64 {
        self.split_at(w).0
    }

    /// Chart position `t` where the unscaled cumulative integral equals `c`.
    pub fn invert_in_chart(&self, end: End, c: f64) -> f64 {
        let ch = self.chart(end);
        if c <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if c >= ch.total() {
            return ch.t_hi;
        }
        let k = ch.cum.partition_point(|&v| v <= c).saturating_sub(1).min(ch.nodes.len() - 2);
        let (mut lo, mut hi) = (ch.nodes[k], ch.nodes[k + 1]);
        let (c_lo, c_hi) = (ch.cum[k], ch.cum[k + 1]);
        let base = ch.nodes[k];
        let mut t = if c_hi > c_lo { lo + (hi - lo) * (c - c_lo) / (c_hi - c_lo) } else { lo };
        let tol = 1e-15 * c.abs().max(1e-300);
        for _ in 0..100 {
            let phi = c_lo + gk21(&|s| self.density(end, s), base, t).0 - c;
            if phi.abs() <= tol {
                break;
            }
            if phi > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.density(end, t);
            let newton = t - phi / d;
            t = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
                break;
            }
        }
        t
    }

    /// Point `(end, t)` with `X = x`.
    pub fn invert(&self, x: f64) -> (End, f64) {
        let x_in = self.scale * self.inflow.total();
        if x <= x_in {
            (End::Inflow, self.invert_in_chart(End::Inflow, x / self.scale))
        } else {
            let rest = (self.h_total() - x) / self.scale;
            (End::Outflow, self.invert_in_chart(End::Outflow, rest))
        }
    }

    /// `int_0^len |Y(h) - level| dh` over one chart, where `Y` is the scaled
    /// cumulative measured from the chart's end.
    pub fn chart_l1(&self, end: End, level: f64) -> f64 {
        let ch = self.chart(end);
        let a = ch.len;
        let y_a = self.scale * ch.total();
        let m_a = self.scale * ch.moment_total();
        if level >= y_a {
            a * (level - y_a) + m_a
        } else {
            let t_c = self.invert_in_chart(end, level / self.scale);
            let m_c = if t_c == f64::NEG_INFINITY { 0.0 } else { self.scale * self.mom_at(end, t_c) };
            a * (y_a - level) - m_a + 2.0 * m_c
        }
    }

    /// `int_0^1 |w(x) - step(x)| dx` where the step jumps from `w_in` to
    /// `w_out` at `x_s`.
    pub fn l1_to_step(&self, x_s: f64) -> f64 {
        self.chart_l1(End::Inflow, x_s) + self.chart_l1(End::Outflow, self.h_total() - x_s)
    }
}
