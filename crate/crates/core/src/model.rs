//! Quadrature state-space model of a pumped two-port OPO and its
//! norm-bounded uncertainty decompositions.
//!
//! With pump phase deviation `φ` and relative amplitude deviation `r`, the
//! state matrix of the true plant is
//!
//! ```text
//! A_true = −(κ/2)·I + χ(1 + r)·[[cos φ, sin φ], [sin φ, −cos φ]]
//! ```
//!
//! The passive decomposition keeps `−(κ/2)·I` as the nominal part and treats
//! the whole pump term as uncertainty. The active decomposition moves the
//! `φ = 0` pump term `χ·diag(1, −1)` into the nominal part so that the
//! uncertainty vanishes at the operating point.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mat::{j2, Mat};

/// Slack allowed when checking that a frozen phase lies in the admissible range.
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decomposition {
    /// Whole pump term is uncertain; nominal plant is an empty cavity.
    Passive,
    /// Pump term at zero phase error is nominal; uncertainty vanishes at φ = 0, r = 0.
    Active,
    /// Uncertainty ignored (ρ = 0); nominal plant is the true φ = 0 plant.
    Nominal,
}

impl Decomposition {
    pub fn as_str(self) -> &'static str {
        match self {
            Decomposition::Passive => "passive",
            Decomposition::Active => "active",
            Decomposition::Nominal => "nominal",
        }
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decomposition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "passive" => Ok(Decomposition::Passive),
            "active" => Ok(Decomposition::Active),
            "nominal" => Ok(Decomposition::Nominal),
            other => Err(Error::Validation(format!("unknown decomposition '{other}'"))),
        }
    }
}

/// Physical parameters of the OPO and the admissible pump fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpoParams {
    /// Decay rate through the measured-output mirror.
    pub kappa1: f64,
    /// Decay rate through the control/performance mirror.
    pub kappa2: f64,
    /// Pump coefficient χ = χ⁽²⁾β.
    pub chi: f64,
    /// Closed interval of admissible phase deviations, within [−π, π].
    pub phase_range: (f64, f64),
    /// Upper bound on the relative amplitude deviation Δβ/β.
    pub beta_bound: f64,
}

impl OpoParams {
    pub fn new(kappa1: f64, kappa2: f64, chi: f64, phase_range: (f64, f64), beta_bound: f64) -> Result<Self> {
        let p = Self { kappa1, kappa2, chi, phase_range, beta_bound };
        p.validate()?;
        Ok(p)
    }

    /// The squeezing-experiment cavity used throughout the examples:
    /// κ₁ = 0.0011, κ₂ = 0.8264, χ = 0.0414, full phase range, no amplitude noise.
    pub fn benchmark() -> Self {
        Self { kappa1: 0.0011, kappa2: 0.8264, chi: 0.0414, phase_range: (-PI, PI), beta_bound: 0.0 }
    }

    pub fn with_phase_range(self, lo: f64, hi: f64) -> Self {
        Self { phase_range: (lo, hi), ..self }
    }

    pub fn with_beta_bound(self, beta_bound: f64) -> Self {
        Self { beta_bound, ..self }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa1 + self.kappa2
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa1, self.kappa2, self.chi, self.phase_range.0, self.phase_range.1, self.beta_bound];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("OPO parameters must be finite".into()));
        }
        if self.kappa1 <= 0.0 || self.kappa2 <= 0.0 {
            return Err(Error::Validation(format!(
                "decay rates must be positive (kappa1 = {}, kappa2 = {})",
                self.kappa1, self.kappa2
            )));
        }
        if self.chi < 0.0 {
            return Err(Error::Validation(format!("pump coefficient must be nonnegative, got {}", self.chi)));
        }
        let (lo, hi) = self.phase_range;
        if !(-PI - RANGE_SLACK..=0.0).contains(&lo) || !(0.0..=PI + RANGE_SLACK).contains(&hi) {
            return Err(Error::Validation(format!(
                "phase range [{lo}, {hi}] must lie in [-pi, pi] and contain 0"
            )));
        }
        if !(0.0..1.0).contains(&self.beta_bound) {
            return Err(Error::Validation(format!("beta_bound must lie in [0, 1), got {}", self.beta_bound)));
        }
        Ok(())
    }

    /// Largest phase excursion α = max(|φ_lo|, |φ_hi|).
    pub fn max_phase_excursion(&self) -> f64 {
        self.phase_range.0.abs().max(self.phase_range.1.abs())
    }
}

/// Plant matrices together with the uncertainty factorization ΔA = H₁·F·E₁,
/// ‖F‖ ≤ ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainPlant {
    pub a: Mat,
    /// Control input.
    pub b1: Mat,
    /// Disturbance input.
    pub b2: Mat,
    /// Performance output.
    pub c1: Mat,
    pub d1: Mat,
    /// Measured output.
    pub c2: Mat,
    pub d2: Mat,
    pub h1: Mat,
    pub e1: Mat,
    pub rho: f64,
    /// Commutation matrix of the plant quadratures.
    pub theta: Mat,
    pub decomposition: Decomposition,
    pub params: OpoParams,
}

impl UncertainPlant {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// State matrix of the true plant at a frozen fluctuation.
    pub fn frozen_a(&self, dphi: f64, dbeta_ratio: f64) -> Result<Mat> {
        let d = delta_a(&self.params, self.decomposition, dphi, dbeta_ratio)?;
        Ok(&self.a + &d)
    }
}

/// `[[cos φ, sin φ], [sin φ, −cos φ]]`, the orthogonal factor of the pump term.
pub(crate) fn pump_reflection(phi: f64) -> Mat {
    let (s, c) = phi.sin_cos();
    Mat::from_rows(&[[c, s], [s, -c]])
}

pub fn build_plant(p: &OpoParams, decomposition: Decomposition) -> Result<UncertainPlant> {
    p.validate()?;
    let half_kappa = 0.5 * p.kappa();
    let cavity = Mat::scalar(2, -half_kappa);
    let a = match decomposition {
        Decomposition::Passive => cavity,
        Decomposition::Active | Decomposition::Nominal => &cavity + &Mat::from_diag(&[p.chi, -p.chi]),
    };
    let (h1, e1) = match decomposition {
        Decomposition::Nominal => (Mat::zeros(2, 2), Mat::zeros(2, 2)),
        _ => (Mat::scalar(2, p.chi), Mat::identity(2)),
    };
    let s1 = p.kappa1.sqrt();
    let s2 = p.kappa2.sqrt();
    Ok(UncertainPlant {
        a,
        b1: Mat::scalar(2, s2),
        b2: Mat::scalar(2, s1),
        c1: Mat::scalar(2, s2),
        d1: Mat::scalar(2, -1.0),
        c2: Mat::scalar(2, s1),
        d2: Mat::scalar(2, -1.0),
        h1,
        e1,
        rho: rho_bound(decomposition, p),
        theta: j2(),
        decomposition,
        params: *p,
    })
}

/// Frozen uncertainty matrix ΔA at phase deviation `dphi` and relative
/// amplitude deviation `dbeta_ratio`.
///
/// For a nominal plant this is the offset of the true plant from the φ = 0
/// plant, which coincides with the active decomposition.
pub fn delta_a(p: &OpoParams, decomposition: Decomposition, dphi: f64, dbeta_ratio: f64) -> Result<Mat> {
    let (lo, hi) = p.phase_range;
    if !dphi.is_finite() || dphi < lo - RANGE_SLACK || dphi > hi + RANGE_SLACK {
        return Err(Error::Validation(format!("phase deviation {dphi} outside [{lo}, {hi}]")));
    }
    if !dbeta_ratio.is_finite() || dbeta_ratio < 0.0 || dbeta_ratio > p.beta_bound + RANGE_SLACK {
        return Err(Error::Validation(format!(
            "amplitude ratio {dbeta_ratio} outside [0, {}]",
            p.beta_bound
        )));
    }
    let refl = pump_reflection(dphi);
    let m = match decomposition {
        Decomposition::Passive => refl.scale(1.0 + dbeta_ratio),
        Decomposition::Active | Decomposition::Nominal => {
            let (s, c) = dphi.sin_cos();
            let phase_part = Mat::from_rows(&[[c - 1.0, s], [s, 1.0 - c]]);
            &phase_part + &refl.scale(dbeta_ratio)
        }
    };
    Ok(m.scale(p.chi))
}

/// Uncertainty bound ρ used in synthesis for the given decomposition.
pub fn rho_bound(decomposition: Decomposition, p: &OpoParams) -> f64 {
    match decomposition {
        Decomposition::Passive => 1.0 + p.beta_bound,
        Decomposition::Active => {
            let alpha = p.max_phase_excursion();
            let phase_part = if alpha >= PI { 2.0 } else { (2.0 - 2.0 * alpha.cos()).sqrt() };
            phase_part + p.beta_bound
        }
        Decomposition::Nominal => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::max_singular_value;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn passive_benchmark_matrices() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Passive).unwrap();
        let a = plant.a.as_scalar_identity(0.0).expect("scalar state matrix");
        assert_abs_diff_eq!(a, -0.4138, epsilon = 1e-4);
        assert_abs_diff_eq!(plant.b1[(0, 0)], 0.9091, epsilon = 5e-5);
        assert_abs_diff_eq!(plant.b2[(1, 1)], 0.0332, epsilon = 5e-5);
        assert_eq!(plant.b1, plant.c1);
        assert_eq!(plant.b2, plant.c2);
        assert_eq!(plant.d1, Mat::scalar(2, -1.0));
        assert_eq!(plant.theta, j2());
        assert_eq!(plant.rho, 1.0);
    }

    #[test]
    fn active_benchmark_state_matrix() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Active).unwrap();
        assert_abs_diff_eq!(plant.a[(0, 0)], -0.3724, epsilon = 1e-4);
        assert_abs_diff_eq!(plant.a[(1, 1)], -0.4551, epsilon = 1e-4);
        assert_eq!(plant.a[(0, 1)], 0.0);
        assert_eq!(plant.rho, 2.0);
    }

    #[test]
    fn nominal_plant_has_no_uncertainty() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Nominal).unwrap();
        assert_eq!(plant.rho, 0.0);
        assert_eq!(plant.h1, Mat::zeros(2, 2));
        assert_eq!(plant.e1, Mat::zeros(2, 2));
        let active = build_plant(&OpoParams::benchmark(), Decomposition::Active).unwrap();
        assert_eq!(plant.a, active.a);
    }

    #[test]
    fn zero_pump_makes_decompositions_coincide() {
        let p = OpoParams { chi: 0.0, ..OpoParams::benchmark() };
        let pas = build_plant(&p, Decomposition::Passive).unwrap();
        let act = build_plant(&p, Decomposition::Active).unwrap();
        assert_eq!(pas.a, act.a);
        for phi in [-3.0, -1.0, 0.0, 0.5, 3.1] {
            assert_eq!(delta_a(&p, Decomposition::Passive, phi, 0.0).unwrap().max_abs(), 0.0);
            assert_eq!(delta_a(&p, Decomposition::Active, phi, 0.0).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn delta_a_examples() {
        let p = OpoParams::benchmark().with_beta_bound(0.1);
        assert_eq!(delta_a(&p, Decomposition::Passive, 0.0, 0.0).unwrap(), Mat::from_diag(&[0.0414, -0.0414]));
        assert_eq!(delta_a(&p, Decomposition::Active, 0.0, 0.0).unwrap().max_abs(), 0.0);
        let d = delta_a(&p, Decomposition::Passive, PI / 2.0, 0.05).unwrap();
        let s = 0.0414 * 1.05;
        assert_abs_diff_eq!(d[(0, 0)], 0.0, epsilon = 1e-17);
        assert_abs_diff_eq!(d[(1, 1)], 0.0, epsilon = 1e-17);
        assert_abs_diff_eq!(d[(0, 1)], s, epsilon = 1e-16);
        assert_abs_diff_eq!(d[(1, 0)], s, epsilon = 1e-16);
    }

    #[test]
    fn delta_a_rejects_out_of_range() {
        let p = OpoParams::benchmark().with_phase_range(-PI / 4.0, PI / 4.0);
        assert!(delta_a(&p, Decomposition::Passive, 1.0, 0.0).is_err());
        assert!(delta_a(&p, Decomposition::Passive, 0.1, 0.01).is_err());
        assert!(delta_a(&p, Decomposition::Passive, 0.1, -0.01).is_err());
    }

    #[test]
    fn rho_bound_examples() {
        let p = OpoParams::benchmark();
        assert_eq!(rho_bound(Decomposition::Passive, &p), 1.0);
        assert_eq!(rho_bound(Decomposition::Active, &p), 2.0);
        assert_eq!(rho_bound(Decomposition::Nominal, &p), 0.0);
        let q = p.with_phase_range(-PI / 4.0, PI / 4.0);
        assert_abs_diff_eq!(rho_bound(Decomposition::Active, &q), (2.0 - 2f64.sqrt()).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(rho_bound(Decomposition::Active, &q), 0.7654, epsilon = 1e-4);
        // Corollary forms with amplitude noise.
        let r = p.with_beta_bound(0.05);
        assert_abs_diff_eq!(rho_bound(Decomposition::Passive, &r), 1.05, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_bound(Decomposition::Active, &r), 2.05, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        let b = OpoParams::benchmark();
        assert!(OpoParams { kappa1: 0.0, ..b }.validate().is_err());
        assert!(OpoParams { chi: -1.0, ..b }.validate().is_err());
        assert!(b.with_phase_range(0.1, 1.0).validate().is_err());
        assert!(b.with_phase_range(-4.0, 1.0).validate().is_err());
        assert!(b.with_beta_bound(1.0).validate().is_err());
        assert!(b.with_beta_bound(0.99).validate().is_ok());
        assert!("Active".parse::<Decomposition>().is_ok());
        assert!("robust".parse::<Decomposition>().is_err());
    }

    #[test]
    fn active_uncertainty_vanishes_only_at_operating_point() {
        let p = OpoParams::benchmark().with_beta_bound(0.2);
        for k in 0..=1000 {
            let phi = -PI + 2.0 * PI * k as f64 / 1000.0;
            for r in [0.0, 1e-6, 0.1] {
                let d = delta_a(&p, Decomposition::Active, phi, r).unwrap();
                let zero = d.max_abs() <= 1e-14;
                assert_eq!(zero, phi.abs() < 1e-12 && r == 0.0, "phi={phi} r={r}");
            }
        }
    }

    proptest! {
        #[test]
        fn passive_uncertainty_gain_is_exact(phi in -PI..PI, r in 0.0..0.5f64) {
            let p = OpoParams::benchmark().with_beta_bound(0.5);
            let d = delta_a(&p, Decomposition::Passive, phi, r).unwrap();
            let sigma = max_singular_value(&d.to_complex());
            prop_assert!((sigma - p.chi * (1.0 + r)).abs() <= 1e-12);
        }

        #[test]
        fn decompositions_differ_only_in_nominal_pump(chi in 0.0..0.5f64, k1 in 1e-4..1.0f64, k2 in 1e-4..1.0f64) {
            let p = OpoParams { kappa1: k1, kappa2: k2, chi, ..OpoParams::benchmark() };
            let pas = build_plant(&p, Decomposition::Passive).unwrap();
            let act = build_plant(&p, Decomposition::Active).unwrap();
            let shifted = &pas.a + &Mat::from_diag(&[chi, -chi]);
            prop_assert!((&shifted - &act.a).max_abs() <= 1e-15);
        }
    }

    #[test]
    fn uncertainty_factor_respects_bound_on_grid() {
        for range in [(-PI, PI), (-PI / 4.0, PI / 4.0), (-1.0, 0.3)] {
            for bb in [0.0, 0.05] {
                let p = OpoParams::benchmark().with_phase_range(range.0, range.1).with_beta_bound(bb);
                for decomposition in [Decomposition::Passive, Decomposition::Active] {
                    let rho = rho_bound(decomposition, &p);
                    for k in 0..1000 {
                        let phi = range.0 + (range.1 - range.0) * k as f64 / 999.0;
                        for r in [0.0, bb] {
                            let f = delta_a(&p, decomposition, phi, r).unwrap().scale(1.0 / p.chi);
                            let norm = max_singular_value(&f.to_complex());
                            assert!(norm <= rho + 1e-12, "{decomposition} phi={phi} r={r}: {norm} > {rho}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn true_plant_is_decomposition_independent() {
        let p = OpoParams::benchmark().with_beta_bound(0.05);
        let pas = build_plant(&p, Decomposition::Passive).unwrap();
        let act = build_plant(&p, Decomposition::Active).unwrap();
        let nom = build_plant(&p, Decomposition::Nominal).unwrap();
        for phi in [-2.5, -0.3, 0.0, 1.7] {
            let a = pas.frozen_a(phi, 0.03).unwrap();
            assert!((&a - &act.frozen_a(phi, 0.03).unwrap()).max_abs() < 1e-15);
            assert!((&a - &nom.frozen_a(phi, 0.03).unwrap()).max_abs() < 1e-15);
        }
    }
}
