//! Central robust H∞ controller built from the scaled Riccati pair.

use crate::error::{Error, Result};
use crate::mat::{self, Mat};
use crate::model::{Decomposition, UncertainPlant};
use crate::riccati::{assemble_pair, solve_care, RiccatiSolution};

/// Controller state-space triple `dx_c = Ac x_c dt + Bc dy`, `u = Cc x_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceController {
    pub ac: Mat,
    pub bc: Mat,
    pub cc: Mat,
}

impl StateSpaceController {
    pub fn new(ac: Mat, bc: Mat, cc: Mat) -> Result<Self> {
        let n = ac.rows();
        if !ac.is_square() || bc.rows() != n || cc.cols() != n {
            return Err(Error::Validation(format!(
                "inconsistent controller shapes: Ac {:?}, Bc {:?}, Cc {:?}",
                ac.shape(),
                bc.shape(),
                cc.shape()
            )));
        }
        Ok(Self { ac, bc, cc })
    }

    pub fn state_dim(&self) -> usize {
        self.ac.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    RobustPassiveDecomp,
    RobustActiveDecomp,
    Nominal,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::RobustPassiveDecomp => "robust-passive",
            Self::RobustActiveDecomp => "robust-active",
            Self::Nominal => "nominal",
        }
    }
}

impl From<Decomposition> for ControllerKind {
    fn from(d: Decomposition) -> Self {
        match d {
            Decomposition::Passive => Self::RobustPassiveDecomp,
            Decomposition::Active => Self::RobustActiveDecomp,
            Decomposition::Nominal => Self::Nominal,
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "robust-passive" => Ok(Self::RobustPassiveDecomp),
            "robust-active" => Ok(Self::RobustActiveDecomp),
            "nominal" => Ok(Self::Nominal),
            other => Err(Error::Validation(format!("unknown controller kind '{other}'"))),
        }
    }
}

/// A synthesized controller together with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub controller: StateSpaceController,
    pub x: RiccatiSolution,
    pub y: RiccatiSolution,
    pub gamma: f64,
    pub epsilon: f64,
    pub rho: f64,
    /// Spectral radius of `X·Y`.
    pub zeta: f64,
    pub kind: ControllerKind,
}

/// Spectral radius of `X·Y`.
pub fn coupling_radius(x: &Mat, y: &Mat) -> Result<f64> {
    if !x.is_square() || x.shape() != y.shape() {
        return Err(Error::Validation(format!("X {:?} and Y {:?} must be square and equal-sized", x.shape(), y.shape())));
    }
    Ok(mat::spectral_radius(&(x * y))?)
}

pub fn synthesize(plant: &UncertainPlant, gamma: f64, epsilon: f64) -> Result<ControllerParams> {
    let (primal, dual) = assemble_pair(plant, gamma, epsilon)?;
    let xs = solve_care(&primal)?;
    let ys = solve_care(&dual)?;
    let zeta = coupling_radius(&xs.x, &ys.x)?;
    if zeta >= 1.0 {
        return Err(Error::CouplingFailure(zeta));
    }
    let controller = central_controller(plant, gamma, epsilon, &xs.x, &ys.x)?;
    Ok(ControllerParams {
        controller,
        x: xs,
        y: ys,
        gamma,
        epsilon,
        rho: plant.rho,
        zeta,
        kind: plant.decomposition.into(),
    })
}

/// Uncertainty-blind H∞ controller; `plant` must carry no uncertainty terms.
pub fn synthesize_nominal(plant: &UncertainPlant, gamma: f64) -> Result<ControllerParams> {
    if plant.rho != 0.0 || plant.h1.max_abs() != 0.0 || plant.e1.max_abs() != 0.0 {
        return Err(Error::Validation("nominal synthesis requires rho = 0 and H1 = E1 = 0".into()));
    }
    synthesize(plant, gamma, 1.0)
}

fn central_controller(plant: &UncertainPlant, gamma: f64, epsilon: f64, x: &Mat, y: &Mat) -> Result<StateSpaceController> {
    let n = plant.state_dim();
    let inv_g2 = gamma.powi(-2);
    let g = &plant.d1.transpose() * &plant.d1;
    let rhs = &(&plant.b1.transpose() * x) + &(&plant.d1.transpose() * &plant.c1);
    let cc = -&mat::solve_linear(&g, &rhs)?;

    let big_gamma = (&plant.d2 * &plant.d2.transpose()).scale(inv_g2);
    let gamma_inv = mat::inverse(&big_gamma)?;
    let inner = &(y * &plant.c2.transpose()) + &(&plant.b2 * &plant.d2.transpose()).scale(inv_g2);
    let coupling = &Mat::identity(n) - &(y * x);
    let bc = &mat::solve_linear(&coupling, &inner)? * &gamma_inv;

    let hh = (&plant.h1 * &plant.h1.transpose()).scale(epsilon * plant.rho * plant.rho);
    let b2_eff = &plant.b2 - &(&bc * &plant.d2);
    let bracket = &hh + &(&b2_eff * &plant.b2.transpose()).scale(inv_g2);
    let ac = &(&(&plant.a + &(&plant.b1 * &cc)) - &(&bc * &plant.c2)) + &(&bracket * x);
    StateSpaceController::new(ac, bc, cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_plant, OpoParams};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn diag(m: &Mat) -> Vec<f64> {
        assert!(m.is_diagonal(1e-12), "{m:?}");
        m.diag()
    }

    #[test]
    fn passive_controller_matches_published_values() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Passive).unwrap();
        let c = synthesize(&plant, 0.05, 1.0).unwrap();
        for v in diag(&c.controller.ac) {
            assert_abs_diff_eq!(v, -2.0763, epsilon = 1e-3);
        }
        for v in diag(&c.controller.bc) {
            assert_abs_diff_eq!(v, -0.0334, epsilon = 1e-3);
        }
        for v in diag(&c.controller.cc) {
            assert_abs_diff_eq!(v, -1.8265, epsilon = 1e-3);
        }
        assert_abs_diff_eq!(c.zeta, 3.0092 * 0.0021, epsilon = 2e-4);
        assert_eq!(c.kind, ControllerKind::RobustPassiveDecomp);
    }

    #[test]
    fn passive_feedback_gain_oracle() {
        // Cc = −G⁻¹(B₁ᵀX + D₁ᵀC₁) = −(√κ₂·x − √κ₂) per axis with D₁ = −I.
        let p = OpoParams::benchmark();
        let plant = build_plant(&p, Decomposition::Passive).unwrap();
        let c = synthesize(&plant, 0.05, 1.0).unwrap();
        let x = c.x.x[(0, 0)];
        assert_abs_diff_eq!(c.controller.cc[(0, 0)], -p.kappa2.sqrt() * (x - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn active_controller_matches_published_values() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Active).unwrap();
        let c = synthesize(&plant, 0.05, 1.0).unwrap();
        let check = |got: Vec<f64>, want: [f64; 2]| {
            for (g, w) in got.iter().zip(want) {
                assert_abs_diff_eq!(*g, w, epsilon = 2e-3);
            }
        };
        check(diag(&c.x.x), [3.2125, 2.8733]);
        check(diag(&c.y.x), [0.0094, 0.0077]);
        check(diag(&c.controller.ac), [-2.2219, -2.0109]);
        check(diag(&c.controller.bc), [-0.0342, -0.0339]);
        check(diag(&c.controller.cc), [-2.0113, -1.7030]);
        assert_abs_diff_eq!(c.zeta, 0.0302, epsilon = 1e-3);
    }

    #[test]
    fn coupling_radius_examples() {
        assert_eq!(coupling_radius(&Mat::zeros(2, 2), &Mat::identity(2)).unwrap(), 0.0);
        let x = Mat::from_diag(&[3.2125, 2.8733]);
        let y = Mat::from_diag(&[0.0094, 0.0077]);
        assert_abs_diff_eq!(coupling_radius(&x, &y).unwrap(), 3.2125 * 0.0094, epsilon = 1e-12);
        assert!(coupling_radius(&x, &Mat::identity(3)).is_err());
    }

    #[test]
    fn passive_design_ignores_phase_range() {
        let full = build_plant(&OpoParams::benchmark(), Decomposition::Passive).unwrap();
        let narrow = build_plant(&OpoParams::benchmark().with_phase_range(-FRAC_PI_4, FRAC_PI_4), Decomposition::Passive).unwrap();
        let a = synthesize(&full, 0.05, 1.0).unwrap().controller;
        let b = synthesize(&narrow, 0.05, 1.0).unwrap().controller;
        assert!((&a.ac - &b.ac).max_abs() <= 1e-12);
        assert!((&a.bc - &b.bc).max_abs() <= 1e-12);
        assert!((&a.cc - &b.cc).max_abs() <= 1e-12);
    }

    #[test]
    fn active_design_tracks_phase_range() {
        let full = build_plant(&OpoParams::benchmark().with_phase_range(-PI, PI), Decomposition::Active).unwrap();
        let narrow = build_plant(&OpoParams::benchmark().with_phase_range(-FRAC_PI_4, FRAC_PI_4), Decomposition::Active).unwrap();
        let a = synthesize(&full, 0.05, 1.0).unwrap();
        let b = synthesize(&narrow, 0.05, 1.0).unwrap();
        assert!((&a.controller.ac - &b.controller.ac).norm_fro() > 1e-6);
        assert_abs_diff_eq!(b.rho, (2.0 - 2f64.sqrt()).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn nominal_is_epsilon_free() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Nominal).unwrap();
        let base = synthesize_nominal(&plant, 0.05).unwrap();
        for eps in [0.01, 3.0, 250.0] {
            let other = synthesize(&plant, 0.05, eps).unwrap();
            assert!((&base.controller.ac - &other.controller.ac).max_abs() <= 1e-12);
            assert!((&base.controller.bc - &other.controller.bc).max_abs() <= 1e-12);
            assert!((&base.controller.cc - &other.controller.cc).max_abs() <= 1e-12);
        }
        assert_eq!(base.kind, ControllerKind::Nominal);
        let robust = build_plant(&OpoParams::benchmark(), Decomposition::Passive).unwrap();
        assert!(matches!(synthesize_nominal(&robust, 0.05), Err(Error::Validation(_))));
    }

    #[test]
    fn large_gamma_still_synthesizes() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Nominal).unwrap();
        let c = synthesize_nominal(&plant, 1e3).unwrap();
        assert!(c.zeta < 1.0);
    }

    #[test]
    fn infeasible_gamma_is_reported() {
        let plant = build_plant(&OpoParams::benchmark(), Decomposition::Passive).unwrap();
        let err = synthesize(&plant, 0.001, 1.0).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Infeasible, "{err}");
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in [ControllerKind::RobustPassiveDecomp, ControllerKind::RobustActiveDecomp, ControllerKind::Nominal] {
            assert_eq!(k.as_str().parse::<ControllerKind>().unwrap(), k);
        }
        assert!("robust".parse::<ControllerKind>().is_err());
    }
}
