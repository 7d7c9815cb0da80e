//! Dormand–Prince 5(4) for scalar ODEs `y' = f(x, y)`.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Adaptive stepper holding the first-same-as-last derivative.
#[derive(Debug, Clone)]
pub struct DormandPrince<F> {
    f: F,
    tol: Tolerances,
    pub x: f64,
    pub y: f64,
    k1: f64,
    pub h: f64,
    pub steps: usize,
}

/// Outcome of a trial step that was accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub x: f64,
    pub y: f64,
}

impl<F: Fn(f64, f64) -> f64> DormandPrince<F> {
    pub fn new(f: F, x0: f64, y0: f64, h0: f64, tol: Tolerances) -> Self {
        let k1 = f(x0, y0);
        Self { f, tol, x: x0, y: y0, k1, h: h0, steps: 0 }
    }

    /// Trial step of size `h` from the current state: `(y_new, k7, error norm)`.
    fn trial(&self, h: f64) -> (f64, f64, f64) {
        let (x, y, k1) = (self.x, self.y, self.k1);
        let f = &self.f;
        let k2 = f(x + C2 * h, y + h * A21 * k1);
        let k3 = f(x + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(x + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(x + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(x + h, y_new);
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let sc = self.tol.atol + self.tol.rtol * y.abs().max(y_new.abs());
        (y_new, k7, (err / sc).abs())
    }

    /// Advance by one accepted step, never past `x_max`.
    pub fn step(&mut self, x_max: f64) -> Result<Step> {
        loop {
            let proposal = self.h;
            let clipped = self.h >= x_max - self.x;
            let mut h = self.h.min(x_max - self.x);
            if !(h > 0.0) {
                return Err(Error::StepSizeUnderflow { x: self.x });
            }
            if h < 4.0 * f64::EPSILON * self.x.abs() && self.x + h < x_max {
                return Err(Error::StepSizeUnderflow { x: self.x });
            }
            let (y_new, k7, err) = self.trial(h);
            if !y_new.is_finite() || !err.is_finite() {
                self.h = 0.25 * h;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                if self.x + h >= x_max {
                    h = x_max - self.x;
                    self.x = x_max;
                } else {
                    self.x += h;
                }
                self.y = y_new;
                self.k1 = k7;
                self.h = if clipped { proposal.max(h * factor) } else { h * factor };
                self.steps += 1;
                return Ok(Step { x: self.x, y: self.y });
            }
            self.h = h * factor.min(1.0);
        }
    }

    /// Step until `y` reaches `target` (with `y` increasing) or `x` reaches
    /// `x_max`, whichever comes first. Returns the crossing abscissa, or
    /// `None` when `x_max` came first; the final step is shortened by
    /// safeguarded secant iteration so that it lands on `target`.
    pub fn advance_to_level(&mut self, target: f64, x_max: f64) -> Result<Option<f64>> {
        while self.y < target {
            if self.x >= x_max {
                return Ok(None);
            }
            let (x0, y0, k0, h0) = (self.x, self.y, self.k1, self.h);
            let s = self.step(x_max)?;
            if s.y < target {
                continue;
            }
            let (mut lo, mut hi) = (0.0, s.x - x0);
            let mut h = hi * (target - y0) / (s.y - y0);
            for _ in 0..100 {
                let (y_new, k7, _) = {
                    self.x = x0;
                    self.y = y0;
                    self.k1 = k0;
                    self.trial(h)
                };
                let done = (y_new - target).abs() <= 1e-14 * target.abs().max(1.0)
                    || hi - lo <= 1e-16 * x0.abs().max(1.0);
                if done {
                    self.x = x0 + h;
                    self.y = y_new;
                    self.k1 = k7;
                    break;
                }
                if y_new > target {
                    hi = h;
                } else {
                    lo = h;
                }
                let slope = 0.5 * (k0 + k7);
                let guess = if slope > 0.0 { h - (y_new - target) / slope } else { f64::NAN };
                h = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
            }
            self.h = h0;
            return Ok(Some(self.x));
        }
        Ok(Some(self.x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Tolerances = Tolerances { rtol: 1e-12, atol: 1e-14 };

    #[test]
    fn exponential_growth() {
        let mut dp = DormandPrince::new(|_x, y| y, 0.0, 1.0, 1e-3, TOL);
        while dp.x < 1.0 {
            dp.step(1.0).unwrap();
        }
        assert!((dp.y - 1f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn time_dependent() {
        let mut dp = DormandPrince::new(|x: f64, _y| x.cos(), 0.0, 0.0, 1e-2, TOL);
        while dp.x < 2.0 {
            dp.step(2.0).unwrap();
        }
        assert!((dp.y - 2f64.sin()).abs() < 1e-11);
    }

    #[test]
    fn lands_on_level() {
        let mut dp = DormandPrince::new(|_x, _y| 2.0, 0.0, 0.0, 0.1, TOL);
        let x = dp.advance_to_level(1.0, 10.0).unwrap().unwrap();
        assert!((x - 0.5).abs() < 1e-13);
        assert!((dp.y - 1.0).abs() < 1e-13);
    }

    #[test]
    fn level_not_reached() {
        let mut dp = DormandPrince::new(|_x, _y| 1.0, 0.0, 0.0, 0.1, TOL);
        assert_eq!(dp.advance_to_level(5.0, 1.0).unwrap(), None);
        assert!((dp.x - 1.0).abs() < 1e-15 && (dp.y - 1.0).abs() < 1e-13);
    }
}
