//! Upstream/downstream state pairs for the barotropic and polytropic gas laws.
//!
//! Every state produced here is normalized to unit mass flux, `rho * u = 1`,
//! so `rho = 1 / u` holds along any steady profile built from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::roots::bisect;

/// Equation of state family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LawKind {
    /// `p = rho^gamma`
    BarotropicIsentropic,
    /// `e = p / ((gamma - 1) rho)`, with `p = rho R T`
    PolytropicFull,
}

impl LawKind {
    fn label(self) -> &'static str {
        match self {
            LawKind::BarotropicIsentropic => "barotropic",
            LawKind::PolytropicFull => "polytropic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasLaw {
    pub kind: LawKind,
    pub gamma: f64,
    /// Ideal-gas constant; only the temperature of viscous polytropic
    /// profiles depends on it.
    pub gas_constant: f64,
}

impl GasLaw {
    pub fn new(kind: LawKind, gamma: f64, gas_constant: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(gas_constant > 0.0) || !gas_constant.is_finite() {
            return Err(Error::InvalidInput(format!(
                "gas constant must be positive, got {gas_constant}"
            )));
        }
        Ok(Self { kind, gamma, gas_constant })
    }

    pub fn barotropic(gamma: f64) -> Result<Self> {
        Self::new(LawKind::BarotropicIsentropic, gamma, 1.0)
    }

    pub fn polytropic(gamma: f64, gas_constant: f64) -> Result<Self> {
        Self::new(LawKind::PolytropicFull, gamma, gas_constant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowState {
    pub u: f64,
    pub rho: f64,
    pub p: f64,
    pub mach: f64,
}

impl FlowState {
    pub fn new(u: f64, rho: f64, p: f64, gamma: f64) -> Self {
        let mach = (rho * u * u / (gamma * p)).sqrt();
        Self { u, rho, p, mach }
    }

    pub fn mach_sq(&self, gamma: f64) -> f64 {
        self.rho * self.u * self.u / (gamma * self.p)
    }

    /// Bernoulli function `u^2/2 + gamma/(gamma-1) p/rho`.
    pub fn bernoulli(&self, gamma: f64) -> f64 {
        0.5 * self.u * self.u + gamma / (gamma - 1.0) * self.p / self.rho
    }

    pub fn momentum_flux(&self) -> f64 {
        self.rho * self.u * self.u + self.p
    }

    pub fn mass_flux(&self) -> f64 {
        self.rho * self.u
    }
}

/// Which conservation laws the shock has to honor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Jump {
    /// Mass, momentum and energy; polytropic gas.
    FullEuler,
    /// Mass and Bernoulli; barotropic gas with heat conduction.
    MassBernoulli,
    /// Mass and momentum; barotropic gas with viscosity.
    MassMomentum,
}

impl Jump {
    fn label(self) -> &'static str {
        match self {
            Jump::FullEuler => "FullEuler",
            Jump::MassBernoulli => "MassBernoulli",
            Jump::MassMomentum => "MassMomentum",
        }
    }

    fn law(self) -> LawKind {
        match self {
            Jump::FullEuler => LawKind::PolytropicFull,
            Jump::MassBernoulli | Jump::MassMomentum => LawKind::BarotropicIsentropic,
        }
    }
}

/// A supersonic state joined to its subsonic partner by a shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockPair {
    pub law: GasLaw,
    pub jump: Jump,
    pub upstream: FlowState,
    pub downstream: FlowState,
    /// `A = P0 = rho0 q0^2 + p0`.
    pub momentum: f64,
    /// `Phi0 = q0^2/2 + gamma/(gamma-1) p0/rho0`.
    pub bernoulli: f64,
}

/// Absolute residuals of the jump relations at a computed pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpResiduals {
    pub mass: f64,
    pub momentum: Option<f64>,
    pub bernoulli: Option<f64>,
    pub normalization: f64,
}

impl JumpResiduals {
    pub fn max(&self) -> f64 {
        [Some(self.mass), self.momentum, self.bernoulli, Some(self.normalization)]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

impl ShockPair {
    pub fn gamma(&self) -> f64 {
        self.law.gamma
    }
    pub fn q0(&self) -> f64 {
        self.upstream.u
    }
    pub fn q1(&self) -> f64 {
        self.downstream.u
    }
    pub fn p0(&self) -> f64 {
        self.upstream.p
    }
    pub fn p1(&self) -> f64 {
        self.downstream.p
    }
    pub fn m0_sq(&self) -> f64 {
        self.upstream.mach_sq(self.law.gamma)
    }
    pub fn m1_sq(&self) -> f64 {
        self.downstream.mach_sq(self.law.gamma)
    }

    pub fn residuals(&self) -> JumpResiduals {
        let g = self.law.gamma;
        let (a, b) = (&self.upstream, &self.downstream);
        let momentum = matches!(self.jump, Jump::FullEuler | Jump::MassMomentum)
            .then(|| (a.momentum_flux() - b.momentum_flux()).abs());
        let bernoulli = matches!(self.jump, Jump::FullEuler | Jump::MassBernoulli)
            .then(|| (a.bernoulli(g) - b.bernoulli(g)).abs());
        JumpResiduals {
            mass: (a.mass_flux() - b.mass_flux()).abs(),
            momentum,
            bernoulli,
            normalization: (a.mass_flux() - 1.0).abs(),
        }
    }
}

/// Upstream state with unit mass flux at squared Mach number `m0_sq`.
///
/// Barotropic: `q0 = (gamma M0^2)^(1/(gamma+1))`, `p0 = rho0^gamma`.
/// Polytropic: `q0 = rho0 = 1`, `p0 = 1/(gamma M0^2)`.
pub fn make_upstream(law: &GasLaw, m0_sq: f64) -> Result<FlowState> {
    if !(m0_sq > 1.0) {
        return Err(Error::NotSupersonic { m0_sq });
    }
    let g = law.gamma;
    Ok(match law.kind {
        LawKind::BarotropicIsentropic => {
            let q0 = (g * m0_sq).powf(1.0 / (g + 1.0));
            let rho0 = 1.0 / q0;
            FlowState::new(q0, rho0, rho0.powf(g), g)
        }
        LawKind::PolytropicFull => FlowState::new(1.0, 1.0, 1.0 / (g * m0_sq), g),
    })
}

/// Barotropic upstream state fixed by its velocity instead of its Mach number.
pub fn upstream_from_velocity(law: &GasLaw, q0: f64) -> Result<FlowState> {
    if law.kind != LawKind::BarotropicIsentropic {
        return Err(Error::InvalidInput(
            "the velocity gauge applies to barotropic gases only".into(),
        ));
    }
    let g = law.gamma;
    let m0_sq = q0.powf(g + 1.0) / g;
    if !(m0_sq > 1.0) {
        return Err(Error::NotSupersonic { m0_sq });
    }
    let rho0 = 1.0 / q0;
    Ok(FlowState::new(q0, rho0, rho0.powf(g), g))
}

/// Solve the scalar jump function for the subsonic partner of `upstream`.
pub fn rh_downstream(upstream: &FlowState, law: &GasLaw, jump: Jump) -> Result<ShockPair> {
    if jump.law() != law.kind {
        return Err(Error::LawMismatch { jump: jump.label(), law: law.kind.label() });
    }
    let g = law.gamma;
    let m0_sq = upstream.mach_sq(g);
    if !(m0_sq > 1.0) {
        return Err(Error::NotSupersonic { m0_sq });
    }
    let q0 = upstream.u;
    let momentum = upstream.momentum_flux();
    let bernoulli = upstream.bernoulli(g);

    let downstream = match jump {
        Jump::MassMomentum => {
            // g(u) = u + u^-gamma, decreasing on (0, q*)
            let q_star = g.powf(1.0 / (1.0 + g));
            let jump_fn = |u: f64| (u - q0) + (u.powf(-g) - q0.powf(-g));
            let lo = descend_until_positive(&jump_fn, q_star)?;
            let u = polish(&jump_fn, |u| 1.0 - g * u.powf(-g - 1.0), lo, q_star)?;
            let rho = 1.0 / u;
            FlowState::new(u, rho, rho.powf(g), g)
        }
        Jump::MassBernoulli => {
            // g(v) = v^(2/(1-g))/2 + g v/(g-1), v = u^(1-g), increasing on (v*, inf)
            let a = 2.0 / (1.0 - g);
            let k = g / (g - 1.0);
            let v0 = q0.powf(1.0 - g);
            let v_star = g.powf((1.0 - g) / (1.0 + g));
            let jump_fn = |v: f64| 0.5 * (v.powf(a) - v0.powf(a)) + k * (v - v0);
            let mut hi = 2.0 * v_star;
            while jump_fn(hi) <= 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::JumpRootNotFound { lo: v_star, hi });
                }
            }
            let v1 = polish(&jump_fn, |v| 0.5 * a * v.powf(a - 1.0) + k, v_star, hi)?;
            let u = v1.powf(1.0 / (1.0 - g));
            let rho = 1.0 / u;
            FlowState::new(u, rho, rho.powf(g), g)
        }
        Jump::FullEuler => {
            // f1(u) = (g+1)/2 u - g P0 + (g-1) Phi0 / u, convex with minimum at the
            // critical speed
            let u_crit = (2.0 * (g - 1.0) * bernoulli / (g + 1.0)).sqrt();
            let jump_fn =
                |u: f64| 0.5 * (g + 1.0) * u - g * momentum + (g - 1.0) * bernoulli / u;
            let lo = descend_until_positive(&jump_fn, u_crit)?;
            let u = polish(
                &jump_fn,
                |u| 0.5 * (g + 1.0) - (g - 1.0) * bernoulli / (u * u),
                lo,
                u_crit,
            )?;
            FlowState::new(u, 1.0 / u, momentum - u, g)
        }
    };

    if !(downstream.p > upstream.p) {
        return Err(Error::EntropyViolation { p0: upstream.p, p1: downstream.p });
    }
    Ok(ShockPair { law: *law, jump, upstream: *upstream, downstream, momentum, bernoulli })
}

fn descend_until_positive(f: &impl Fn(f64) -> f64, start: f64) -> Result<f64> {
    let mut lo = 0.5 * start;
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::JumpRootNotFound { lo, hi: start });
        }
    }
    Ok(lo)
}

/// Bisection to 1e-14 followed by a single Newton step.
fn polish(
    f: &impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let root = bisect(f, lo, hi, 1e-14).ok_or(Error::JumpRootNotFound { lo, hi })?;
    let d = df(root);
    if d != 0.0 {
        let step = f(root) / d;
        if step.abs() < 1e-12 * root.abs().max(1.0) {
            return Ok(root - step);
        }
    }
    Ok(root)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub model: ModelKind,
    pub jump_matches: bool,
    pub supersonic: bool,
    pub subsonic_downstream: bool,
    pub entropy: bool,
    /// `1 < gamma < 3` and `M0^2 <= (3 gamma - 1)/(gamma (3 - gamma))`.
    pub hp1: bool,
    /// `gamma >= 3`.
    pub hp2: bool,
    /// `A - 2 p1`; positive means the heat-conductive weight never degenerates.
    pub hp_weight_margin: f64,
    /// `M0^2 < 2 gamma/(gamma - 1)`.
    pub vp_mach_bound: bool,
    /// `g1(q1) = gamma - (gamma - 1) q0/q1`.
    pub vp_g1_at_q1: f64,
    pub admissible: bool,
}

/// Model-specific admissibility flags. Never fails; sweeps chart inadmissible
/// regions with it.
pub fn admissibility(pair: &ShockPair, model: ModelKind) -> AdmissibilityReport {
    let g = pair.gamma();
    let m0_sq = pair.m0_sq();
    let jump_matches = model.jump() == pair.jump;
    let supersonic = m0_sq > 1.0;
    let subsonic_downstream = pair.m1_sq() < 1.0;
    let entropy = pair.p1() > pair.p0();
    let hp1 = g > 1.0 && g < 3.0 && supersonic && m0_sq <= (3.0 * g - 1.0) / (g * (3.0 - g));
    let hp2 = g >= 3.0 && supersonic;
    let hp_weight_margin = pair.momentum - 2.0 * pair.p1();
    let vp_mach_bound = supersonic && m0_sq < 2.0 * g / (g - 1.0);
    let vp_g1_at_q1 = g - (g - 1.0) * pair.q0() / pair.q1();
    let base = jump_matches && supersonic && subsonic_downstream && entropy;
    let admissible = base
        && match model {
            ModelKind::Hb | ModelKind::Vb => true,
            ModelKind::Hp => (hp1 || hp2) && hp_weight_margin > 0.0,
            ModelKind::Vp => vp_mach_bound,
        };
    AdmissibilityReport {
        model,
        jump_matches,
        supersonic,
        subsonic_downstream,
        entropy,
        hp1,
        hp2,
        hp_weight_margin,
        vp_mach_bound,
        vp_g1_at_q1,
        admissible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn barotropic_upstream_from_mach() {
        let law = GasLaw::barotropic(1.4).unwrap();
        let q0: f64 = 1.5;
        let m0_sq = q0.powf(2.4) / 1.4;
        let u0 = make_upstream(&law, m0_sq).unwrap();
        assert_relative_eq!(u0.u, 1.5, max_relative = 1e-14);
        assert_relative_eq!(u0.rho, 1.0 / 1.5, max_relative = 1e-14);
        assert_relative_eq!(u0.p, u0.rho.powf(1.4), max_relative = 1e-14);
        // independent evaluation of M^2 = rho u^2 / (gamma p)
        assert_relative_eq!(u0.rho * 2.25 / (1.4 * u0.p), m0_sq, max_relative = 1e-13);
    }

    #[test]
    fn polytropic_upstream_gauge() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let u0 = make_upstream(&law, 1.2).unwrap();
        assert_eq!((u0.u, u0.rho), (1.0, 1.0));
        assert_relative_eq!(u0.p, 1.0 / 1.68, max_relative = 1e-15);
        assert_relative_eq!(u0.mach_sq(1.4), 1.2, max_relative = 1e-14);
    }

    #[test]
    fn sonic_upstream_is_rejected() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        assert!(matches!(make_upstream(&law, 1.0), Err(Error::NotSupersonic { .. })));
        let law = GasLaw::barotropic(1.4).unwrap();
        assert!(matches!(make_upstream(&law, 0.7), Err(Error::NotSupersonic { .. })));
    }

    #[test]
    fn bad_gamma_rejected() {
        assert!(GasLaw::barotropic(1.0).is_err());
        assert!(GasLaw::polytropic(1.4, 0.0).is_err());
    }

    #[test]
    fn law_mismatch() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let u0 = make_upstream(&law, 1.2).unwrap();
        assert!(matches!(
            rh_downstream(&u0, &law, Jump::MassMomentum),
            Err(Error::LawMismatch { .. })
        ));
    }

    #[test]
    fn full_euler_matches_mach_ratio() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let u0 = make_upstream(&law, 1.2).unwrap();
        let pair = rh_downstream(&u0, &law, Jump::FullEuler).unwrap();
        let expected = (0.4 * 1.2 + 2.0) / (2.4 * 1.2);
        assert_relative_eq!(pair.q1(), expected, max_relative = 1e-12);
        assert!((pair.q1() - 0.8611).abs() < 1e-4);
        let g = 1.4;
        let (q0, q1) = (pair.q0(), pair.q1());
        assert!((pair.momentum - (g + 1.0) * (q0 + q1) / (2.0 * g)).abs() < 1e-12);
        assert!((pair.bernoulli - (g + 1.0) * q0 * q1 / (2.0 * (g - 1.0))).abs() < 1e-12);
        assert!(pair.residuals().max() < 1e-12);
    }

    #[test]
    fn mass_momentum_root() {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        let pair = rh_downstream(&u0, &law, Jump::MassMomentum).unwrap();
        // plain bisection oracle on q + q^-gamma = const over (0, q*)
        let target = 1.5 + 1.5f64.powf(-1.4);
        let (mut lo, mut hi) = (0.1f64, 1.4f64.powf(1.0 / 2.4));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + mid.powf(-1.4) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((pair.q1() - 0.5 * (lo + hi)).abs() < 1e-13);
        assert!((pair.q1() - 0.890).abs() < 1e-3);
        assert!(pair.residuals().max() < 1e-12);
        assert!(pair.m1_sq() < 1.0);
    }

    #[test]
    fn mass_bernoulli_root() {
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = upstream_from_velocity(&law, 1.5).unwrap();
        let pair = rh_downstream(&u0, &law, Jump::MassBernoulli).unwrap();
        let r = pair.residuals();
        assert!(r.max() < 1e-12, "{r:?}");
        assert!(r.momentum.is_none());
        assert!(pair.q1() < 1.4f64.powf(1.0 / 2.4));
        assert!(pair.p1() > pair.p0());
    }

    #[test]
    fn weak_shock_limit() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let u0 = make_upstream(&law, 1.0 + 1e-6).unwrap();
        let pair = rh_downstream(&u0, &law, Jump::FullEuler).unwrap();
        assert!(pair.q0() - pair.q1() < 1e-5);
        let law = GasLaw::barotropic(1.4).unwrap();
        let u0 = make_upstream(&law, 1.0 + 1e-6).unwrap();
        let pair = rh_downstream(&u0, &law, Jump::MassMomentum).unwrap();
        assert!(pair.q0() - pair.q1() < 1e-5);
    }

    #[test]
    fn admissibility_flags() {
        let law = GasLaw::polytropic(1.4, 1.0).unwrap();
        let pair = rh_downstream(&make_upstream(&law, 1.2).unwrap(), &law, Jump::FullEuler)
            .unwrap();
        let rep = admissibility(&pair, ModelKind::Hp);
        assert!(rep.hp1 && rep.admissible && rep.hp_weight_margin > 0.0);

        let law3 = GasLaw::polytropic(3.0, 1.0).unwrap();
        let pair3 = rh_downstream(&make_upstream(&law3, 5.0).unwrap(), &law3, Jump::FullEuler)
            .unwrap();
        let rep3 = admissibility(&pair3, ModelKind::Hp);
        assert!(rep3.hp2 && !rep3.hp1 && rep3.admissible);

        let pair8 = rh_downstream(&make_upstream(&law, 8.0).unwrap(), &law, Jump::FullEuler)
            .unwrap();
        let rep8 = admissibility(&pair8, ModelKind::Vp);
        assert!(!rep8.vp_mach_bound && !rep8.admissible);
        assert!(rep8.vp_g1_at_q1 <= 0.0);
        assert!(!admissibility(&pair8, ModelKind::Vb).jump_matches);
    }
}
