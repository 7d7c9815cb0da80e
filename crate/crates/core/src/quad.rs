//! Globally adaptive Gauss–Kronrod quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the solver treats the endpoint layers where the flux vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointStrategy {
    /// Integrate in the logarithm of the distance to each endpoint.
    LogSubstitution,
    /// Integrate directly in the profile variable.
    RawAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub endpoint_strategy: EndpointStrategy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_depth: 50,
            endpoint_strategy: EndpointStrategy::LogSubstitution,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(Error::InvalidInput(format!(
                "rel_tol must lie in (0, 1e-3], got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::InvalidInput("abs_tol must be non-negative".into()));
        }
        if self.max_depth < 30 {
            return Err(Error::InvalidInput(format!(
                "max_depth must be at least 30, got {}",
                self.max_depth
            )));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_640_963,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One 21-point Kronrod panel; returns `(value, error estimate)`.
pub fn gk21(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 10];
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * h;
    let mut err = ((kron - gauss) * h).abs();
    // QUADPACK-style rescaling of the raw Gauss/Kronrod difference
    let mean = 0.5 * kron;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let asc = asc * h.abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let res_abs = abs_sum * h.abs();
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error: f64,
    depth: u32,
}

/// Result of an adaptive integration, keeping the final partition so that
/// cumulative integrals can be evaluated without re-adapting.
#[derive(Debug, Clone, PartialEq)]
pub struct Adaptive {
    pub value: f64,
    pub error: f64,
    /// Final subintervals ordered from `a` to `b`.
    pub segments: Vec<Segment>,
}

impl Adaptive {
    /// Left endpoints plus the final right endpoint.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().map(|s| s.a).collect();
        if let Some(last) = self.segments.last() {
            out.push(last.b);
        }
        out
    }

    /// Running sums of the segment values, starting at 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for s in &self.segments {
            acc += s.value;
            out.push(acc);
        }
        out
    }
}

const MAX_SEGMENTS: usize = 20_000;

/// Adaptive integration of `f` over `[a, b]` with initial panels at `breaks`.
pub fn integrate(
    f: &impl Fn(f64) -> f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Adaptive> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("integration needs at least two break points".into()));
    }
    let mut segs: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (value, error) = gk21(f, w[0], w[1]);
            Segment { a: w[0], b: w[1], value, error, depth: 0 }
        })
        .collect();
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            let worst = worst(&segs);
            return Err(Error::QuadratureFailure { a: worst.a, b: worst.b, error: f64::INFINITY });
        }
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            return Ok(Adaptive { value: total, error: err, segments: segs });
        }
        let idx = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segs[idx];
        let m = 0.5 * (s.a + s.b);
        if s.depth >= spec.max_depth || segs.len() >= MAX_SEGMENTS || m <= s.a || m >= s.b {
            return Err(Error::QuadratureFailure { a: s.a, b: s.b, error: s.error });
        }
        let (v1, e1) = gk21(f, s.a, m);
        let (v2, e2) = gk21(f, m, s.b);
        segs[idx] = Segment { a: s.a, b: m, value: v1, error: e1, depth: s.depth + 1 };
        segs.push(Segment { a: m, b: s.b, value: v2, error: e2, depth: s.depth + 1 });
    }
}

fn worst(segs: &[Segment]) -> Segment {
    *segs
        .iter()
        .max_by(|x, y| x.error.total_cmp(&y.error))
        .expect("non-empty partition")
}

/// Composite midpoint rule; used as a brute-force cross-check.
pub fn midpoint_rule(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}
