//! Stabilizing solutions of `AᵀX + XA − XBX + C = 0` and the scaled
//! Riccati pair that drives robust controller synthesis.
//!
//! The solver takes the stable invariant subspace `[U₁; U₂]` of the
//! Hamiltonian `[[A, −B], [−C, −Aᵀ]]` and returns `X = U₂U₁⁻¹`. It does not
//! require `B` or `C` to be semidefinite; indefinite coefficients occur in
//! the dual equation and still admit stabilizing solutions in practice.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::{self, Mat, MatError};
use crate::model::{rho_bound, Decomposition, OpoParams, UncertainPlant};

/// Which equation of the synthesis pair a problem represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiSide {
    /// Control equation, solved for X.
    Primal,
    /// Filter equation, stored transposed and solved for Y.
    Dual,
    Generic,
}

/// `AᵀX + XA − XBX + C = 0` with symmetric `B`, `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiProblem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub side: RiccatiSide,
}

impl RiccatiProblem {
    /// Validates shapes and symmetrizes `b` and `c`.
    pub fn new(a: Mat, b: Mat, c: Mat, side: RiccatiSide) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.shape() != (n, n) || c.shape() != (n, n) {
            return Err(Error::Validation(format!(
                "Riccati coefficients must be square and equal-sized (A {:?}, B {:?}, C {:?})",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if !m.is_finite() {
                return Err(Error::Validation(format!("Riccati coefficient {name} has non-finite entries")));
            }
        }
        Ok(Self { a, b: b.symmetrize(), c: c.symmetrize(), side })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn hamiltonian(&self) -> Mat {
        Mat::from_blocks(&self.a, &-&self.b, &-&self.c, &-&self.a.transpose()).expect("square blocks")
    }

    pub fn residual(&self, x: &Mat) -> Mat {
        let at_x = &self.a.transpose() * x;
        let x_a = x * &self.a;
        let x_b_x = &(x * &self.b) * x;
        &(&(&at_x + &x_a) - &x_b_x) + &self.c
    }

    /// Residual tolerance `1e-8·(1 + ‖X‖)²·max(‖A‖, ‖B‖, ‖C‖)` (Frobenius norms).
    pub fn residual_tolerance(&self, x: &Mat) -> f64 {
        let scale = self.a.norm_fro().max(self.b.norm_fro()).max(self.c.norm_fro());
        1e-8 * (1.0 + x.norm_fro()).powi(2) * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub x: Mat,
    pub residual_norm: f64,
    /// Spectrum of `A − B·X`.
    pub closed_loop_eigs: Vec<Complex64>,
}

impl RiccatiSolution {
    pub fn is_stabilizing(&self) -> bool {
        self.closed_loop_eigs.iter().all(|l| l.re < 0.0)
    }
}

pub fn solve_care(p: &RiccatiProblem) -> Result<RiccatiSolution> {
    solve_care_with_tol(p, mat::IMAG_AXIS_TOL)
}

/// [`solve_care`] with an explicit relative imaginary-axis tolerance.
pub fn solve_care_with_tol(p: &RiccatiProblem, axis_tol: f64) -> Result<RiccatiSolution> {
    let n = p.dim();
    let basis = match mat::stable_subspace_with_tol(&p.hamiltonian(), axis_tol) {
        Ok(v) => v,
        Err(MatError::ImaginaryAxisEigenvalue { re, im, .. }) => {
            return Err(Error::NoStabilizingSolution(format!(
                "Hamiltonian has an eigenvalue on the imaginary axis ({re:+.3e}{im:+.3e}i)"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    if basis.cols() != n {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian stable subspace has dimension {} instead of {n}",
            basis.cols()
        )));
    }
    let u1 = basis.block(0, 0, n, n);
    let u2 = basis.block(n, 0, n, n);
    // X·U₁ = U₂  ⇔  U₁ᵀ·Xᵀ = U₂ᵀ
    let x = match mat::solve_linear(&u1.transpose(), &u2.transpose()) {
        Ok(xt) => xt.transpose().symmetrize(),
        Err(MatError::Singular(cond)) => {
            return Err(Error::NoStabilizingSolution(format!(
                "stable-subspace basis has a singular upper block (condition {cond:.3e})"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let residual_norm = p.residual(&x).norm_fro();
    let closed_loop_eigs = mat::eigenvalues(&(&p.a - &(&p.b * &x)))?;
    let sol = RiccatiSolution { x, residual_norm, closed_loop_eigs };
    if !sol.is_stabilizing() {
        let worst = sol.closed_loop_eigs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::NoStabilizingSolution(format!(
            "solution does not stabilize A − BX (largest real part {worst:.3e})"
        )));
    }
    let tol = p.residual_tolerance(&sol.x);
    if sol.residual_norm > tol {
        return Err(Error::Numerical(format!(
            "Riccati residual {:.3e} exceeds tolerance {tol:.3e}",
            sol.residual_norm
        )));
    }
    Ok(sol)
}

fn invert_named(m: &Mat, name: &str) -> Result<Mat> {
    mat::inverse(m).map_err(|e| Error::Validation(format!("{name} is not invertible: {e}")))
}

/// Builds the control and filter equations of the scaled synthesis problem.
///
/// The filter equation is returned in canonical (transposed) form so that
/// both are solved by [`solve_care`].
pub fn assemble_pair(plant: &UncertainPlant, gamma: f64, epsilon: f64) -> Result<(RiccatiProblem, RiccatiProblem)> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Validation(format!("gamma and epsilon must be positive (gamma = {gamma}, epsilon = {epsilon})")));
    }
    let n = plant.state_dim();
    let eye = Mat::identity(n);
    let g_inv = invert_named(&(&plant.d1.transpose() * &plant.d1), "D1ᵀD1")?;
    let gamma0 = &plant.d2 * &plant.d2.transpose();
    let gamma0_inv = invert_named(&gamma0, "D2D2ᵀ")?;
    let inv_g2 = gamma.powi(-2);
    let rho2 = plant.rho * plant.rho;
    let hh = &plant.h1 * &plant.h1.transpose();
    let ee = &plant.e1.transpose() * &plant.e1;

    let primal_a = &plant.a - &(&(&(&plant.b1 * &g_inv) * &plant.d1.transpose()) * &plant.c1);
    let primal_b = &(&(&(&plant.b1 * &g_inv) * &plant.b1.transpose()) - &hh.scale(epsilon * rho2))
        - &(&plant.b2 * &plant.b2.transpose()).scale(inv_g2);
    let c1_proj = &eye - &(&(&plant.d1 * &g_inv) * &plant.d1.transpose());
    let primal_c = &(&(&plant.c1.transpose() * &c1_proj) * &plant.c1) + &ee.scale(1.0 / epsilon);

    let dual_a = (&plant.a - &(&(&(&plant.b2 * &plant.d2.transpose()) * &gamma0_inv) * &plant.c2)).transpose();
    let dual_b = &(&(&(&plant.c2.transpose() * &gamma0_inv) * &plant.c2).scale(gamma * gamma) - &ee.scale(1.0 / epsilon))
        - &(&plant.c1.transpose() * &plant.c1);
    let m = plant.b2.cols();
    let d2_proj = &Mat::identity(m) - &(&(&plant.d2.transpose() * &gamma0_inv) * &plant.d2);
    let dual_c = &(&(&plant.b2 * &d2_proj) * &plant.b2.transpose()).scale(inv_g2) + &hh.scale(epsilon * rho2);

    Ok((
        RiccatiProblem::new(primal_a, primal_b, primal_c, RiccatiSide::Primal)?,
        RiccatiProblem::new(dual_a, dual_b, dual_c, RiccatiSide::Dual)?,
    ))
}

/// Which equation the closed-form existence conditions cover, decided by the
/// sign of `κ₂ − κ₁/γ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `κ₂ − κ₁/γ² > 0`: conditions characterize the control equation.
    Primal,
    /// `κ₂ − κ₁/γ² ≤ 0`: conditions characterize the filter equation.
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub name: String,
    /// Left-hand side; the condition reads `value > 0` or `value ≥ 0`.
    pub value: f64,
    pub strict: bool,
    pub satisfied: bool,
}

impl Inequality {
    fn new(name: impl Into<String>, value: f64, strict: bool) -> Self {
        let satisfied = if strict { value > 0.0 } else { value >= 0.0 };
        Self { name: name.into(), value, strict, satisfied }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    pub decomposition: Decomposition,
    pub gamma: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub branch: Branch,
    /// `κ₂ − κ₁/γ²`.
    pub branch_value: f64,
    pub inequalities: Vec<Inequality>,
}

impl ExistenceReport {
    pub fn all_satisfied(&self) -> bool {
        self.inequalities.iter().all(|i| i.satisfied)
    }
}

impl std::fmt::Display for ExistenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let branch = match self.branch {
            Branch::Primal => "kappa2 - kappa1/gamma^2 > 0 (control equation)",
            Branch::Dual => "kappa2 - kappa1/gamma^2 <= 0 (filter equation)",
        };
        writeln!(
            f,
            "{} decomposition, gamma = {}, epsilon = {}, rho = {}",
            self.decomposition, self.gamma, self.epsilon, self.rho
        )?;
        writeln!(f, "branch: {branch}; kappa2 - kappa1/gamma^2 = {:.6e}", self.branch_value)?;
        for i in &self.inequalities {
            let op = if i.strict { ">" } else { ">=" };
            let verdict = if i.satisfied { "ok" } else { "VIOLATED" };
            writeln!(f, "  {:<28} {:+.6e} {op} 0  {verdict}", i.name, i.value)?;
        }
        Ok(())
    }
}

/// Per-axis scalar data of the diagonal OPO Riccati pair.
struct AxisForm {
    /// Diagonal entries of the control-equation drift, one per distinct axis.
    primal_drift: Vec<f64>,
    /// Diagonal entries of the filter-equation drift.
    dual_drift: Vec<f64>,
    /// χ²ρ², the uncertainty input weight.
    hh: f64,
    /// Weight of the uncertainty output term (0 for nominal plants).
    e: f64,
    /// Whether the filter-side definiteness condition is strict.
    dual_strict: bool,
}

impl AxisForm {
    fn new(p: &OpoParams, decomposition: Decomposition, rho: f64) -> Self {
        let base_primal = 0.5 * (p.kappa2 - p.kappa1);
        let base_dual = -base_primal;
        let offsets: &[f64] = match decomposition {
            Decomposition::Passive => &[0.0],
            Decomposition::Active | Decomposition::Nominal => &[p.chi, -p.chi],
        };
        let (hh, e) = match decomposition {
            Decomposition::Nominal => (0.0, 0.0),
            _ => (p.chi * p.chi * rho * rho, 1.0),
        };
        Self {
            primal_drift: offsets.iter().map(|o| base_primal + o).collect(),
            dual_drift: offsets.iter().map(|o| base_dual + o).collect(),
            hh,
            e,
            dual_strict: decomposition != Decomposition::Passive,
        }
    }
}

/// Closed-form existence conditions for the benchmark-structured OPO at the
/// decomposition's own uncertainty bound.
pub fn existence_check(p: &OpoParams, decomposition: Decomposition, gamma: f64, epsilon: f64) -> ExistenceReport {
    existence_check_with_rho(p, decomposition, gamma, epsilon, rho_bound(decomposition, p))
}

/// [`existence_check`] with an explicit uncertainty bound.
pub fn existence_check_with_rho(
    p: &OpoParams,
    decomposition: Decomposition,
    gamma: f64,
    epsilon: f64,
    rho: f64,
) -> ExistenceReport {
    let form = AxisForm::new(p, decomposition, rho);
    let g2 = gamma * gamma;
    let branch_value = p.kappa2 - p.kappa1 / g2;
    let mut inequalities = Vec::new();
    let branch = if branch_value > 0.0 {
        inequalities.push(Inequality::new("control-gain-definite", branch_value - epsilon * form.hh, true));
        for (i, a) in form.primal_drift.iter().enumerate() {
            // 4εγ²(a² + b·c) with b = κ₂ − κ₁/γ² − εχ²ρ², c = e/ε
            let value = epsilon * g2 * (4.0 * a * a - 4.0 * form.e * form.hh) + 4.0 * form.e * (g2 * p.kappa2 - p.kappa1);
            inequalities.push(Inequality::new(axis_name("control-hamiltonian", i, &form.primal_drift), value, false));
        }
        Branch::Primal
    } else {
        let d2 = p.kappa1 * g2 - p.kappa2;
        inequalities.push(Inequality::new("filter-gain-definite", d2 - form.e / epsilon, form.dual_strict));
        for (i, a) in form.dual_drift.iter().enumerate() {
            // 4(a² + b·c) with b = κ₁γ² − κ₂ − e/ε, c = εχ²ρ²
            let value = 4.0 * form.hh * epsilon * d2 + 4.0 * a * a - 4.0 * form.e * form.hh;
            inequalities.push(Inequality::new(axis_name("filter-hamiltonian", i, &form.dual_drift), value, false));
        }
        Branch::Dual
    };
    ExistenceReport { decomposition, gamma, epsilon, rho, branch, branch_value, inequalities }
}

fn axis_name(prefix: &str, i: usize, axes: &[f64]) -> String {
    if axes.len() == 1 {
        prefix.to_string()
    } else {
        format!("{prefix}[axis {}]", i + 1)
    }
}

/// One row of an ε-feasibility table. Feasible ε satisfy
/// `eps_lower < ε < eps_upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityRow {
    pub gamma: f64,
    pub rho: f64,
    pub eps_lower: f64,
    pub eps_upper: f64,
    pub feasible: bool,
}

impl FeasibilityRow {
    pub fn admits(&self, epsilon: f64) -> bool {
        self.feasible && epsilon > self.eps_lower && epsilon < self.eps_upper
    }
}

/// Closed-form admissible ε interval for one (γ, ρ).
pub fn epsilon_range(p: &OpoParams, decomposition: Decomposition, gamma: f64, rho: f64) -> FeasibilityRow {
    let form = AxisForm::new(p, decomposition, rho);
    let g2 = gamma * gamma;
    let branch_value = p.kappa2 - p.kappa1 / g2;
    let (eps_lower, eps_upper, feasible) = if branch_value > 0.0 {
        let mut upper = if form.hh > 0.0 { branch_value / form.hh } else { f64::INFINITY };
        for a in &form.primal_drift {
            let coef = g2 * (4.0 * a * a - 4.0 * form.e * form.hh);
            if coef < 0.0 {
                upper = upper.min(4.0 * form.e * g2 * branch_value / -coef);
            }
        }
        (0.0, upper, upper > 0.0)
    } else {
        let d2 = p.kappa1 * g2 - p.kappa2;
        let definite = if form.e > 0.0 { d2 > 0.0 } else if form.dual_strict { d2 > 0.0 } else { d2 >= 0.0 };
        let mut lower: f64 = if form.e > 0.0 && d2 > 0.0 { form.e / d2 } else { 0.0 };
        let mut axes_ok = true;
        for a in &form.dual_drift {
            let deficit = 4.0 * form.e * form.hh - 4.0 * a * a;
            if deficit > 0.0 {
                if form.hh > 0.0 && d2 > 0.0 {
                    lower = lower.max(deficit / (4.0 * form.hh * d2));
                } else {
                    axes_ok = false;
                }
            }
        }
        (lower, f64::INFINITY, definite && axes_ok)
    };
    FeasibilityRow { gamma, rho, eps_lower, eps_upper, feasible }
}

/// ε-feasibility table over `gammas × rhos`, ordered γ-major.
pub fn epsilon_feasibility(p: &OpoParams, decomposition: Decomposition, gammas: &[f64], rhos: &[f64]) -> Result<Vec<FeasibilityRow>> {
    if gammas.is_empty() || rhos.is_empty() {
        return Err(Error::Validation("feasibility grids must be nonempty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::Validation(format!("gamma values must be positive, got {g}")));
    }
    if let Some(r) = rhos.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::Validation(format!("rho values must be nonnegative, got {r}")));
    }
    let points: Vec<(f64, f64)> = gammas.iter().flat_map(|&g| rhos.iter().map(move |&r| (g, r))).collect();
    Ok(points
        .par_iter()
        .map(|&(g, r)| {
            let row = epsilon_range(p, decomposition, g, r);
            if row.eps_upper.is_nan() {
                let upper = eps_upper_by_bisection(p, decomposition, g, r).unwrap_or(0.0);
                FeasibilityRow { eps_upper: upper, feasible: upper > 0.0, ..row }
            } else {
                row
            }
        })
        .collect())
}

/// Largest ε in `[1e-12, 1e6]` for which the existence report holds, by
/// 60 bisection steps. `None` when even the smallest ε fails.
pub fn eps_upper_by_bisection(p: &OpoParams, decomposition: Decomposition, gamma: f64, rho: f64) -> Option<f64> {
    let ok = |eps: f64| existence_check_with_rho(p, decomposition, gamma, eps, rho).all_satisfied();
    let (mut lo, mut hi) = (1e-12, 1e6);
    if !ok(lo) {
        return None;
    }
    if ok(hi) {
        return Some(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
