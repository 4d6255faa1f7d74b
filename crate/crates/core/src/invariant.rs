//! Closed-form invariant operators, their eigenspinors and the resulting
//! dynamical and geometric phases.
//!
//! For a generator `Ĥ/ħ = h(φ)·σ` that co-rotates with the ring angle, the
//! invariant `Î = m(φ)·σ` satisfies `iħ ∂Î + [Î, Ĥ] = 0` when `m` is parallel
//! to `φ̇ ẑ − 2h` in the co-rotating frame. On the AC ring this gives
//! `tan β = 4α sinχ / (1 + 4α cosχ)`; in Stern's geometry
//! `tan χ = 2μB_φ / (ħω + 2μB_z)`. Cone angles are reported in `[0, π)`.
//!
//! Phases follow the exponent of the exact Lewis–Riesenfeld solution:
//! `Θ_dyn = −(1/ħ)∫⟨Ĥ⟩` and `Θ_geo = ∫⟨Ψ̃|i∂|Ψ̃⟩`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ACRingScenario, Scenario, ScenarioKind, SternScenario};
use crate::spinor::{HermitianObservable, Matrix2, Spinor, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn sign(&self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn flip(&self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            other => Err(Error::Domain(format!("unknown branch `{other}`"))),
        }
    }
}

/// Polar angle of an invariant axis. `limiting` marks the vanishing-denominator
/// point where the angle is pinned to π/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeAngle {
    pub angle: f64,
    pub limiting: bool,
}

/// Angle in `[0, π)` with `tan θ = num/den`, choosing the root of
/// `num cosθ − den sinθ = 0`.
fn branch_angle(num: f64, den: f64) -> Result<ConeAngle> {
    if !(num.is_finite() && den.is_finite()) {
        return Err(Error::Domain(format!("non-finite cone relation {num}/{den}")));
    }
    if num == 0.0 && den == 0.0 {
        return Err(Error::Domain("cone relation is 0/0; no invariant axis".into()));
    }
    if den.abs() <= 1e-13 * (1.0 + num.abs()) {
        return Ok(ConeAngle {
            angle: FRAC_PI_2,
            limiting: true,
        });
    }
    let mut angle = num.atan2(den);
    if angle < 0.0 {
        angle += PI;
    }
    if angle >= PI {
        angle -= PI;
    }
    let residual = (num * angle.cos() - den * angle.sin()).abs();
    if residual > 1e-10 * num.hypot(den) {
        angle = bisect_tan_relation(num, den);
    }
    Ok(ConeAngle {
        angle,
        limiting: false,
    })
}

/// Root of `num cosθ − den sinθ` on `[0, π)` by bisection; the function
/// changes sign between the endpoints whenever `num ≠ 0`.
fn bisect_tan_relation(num: f64, den: f64) -> f64 {
    let f = |x: f64| num * x.cos() - den * x.sin();
    if num == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo).signum() == f(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Cone angle of the AC-ring invariant.
pub fn solve_beta(alpha: f64, chi_tilt: f64) -> Result<ConeAngle> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha must be finite and >= 0 (got {alpha})")));
    }
    if !chi_tilt.is_finite() {
        return Err(Error::Domain(format!("chi_tilt must be finite (got {chi_tilt})")));
    }
    let (s, c) = chi_tilt.sin_cos();
    branch_angle(4.0 * alpha * s, 1.0 + 4.0 * alpha * c)
}

/// Alternative relation `tan β = α sinχ/(α cosχ − 1)` with the same branch rule.
/// It is the invariant condition for a generator `+(α/2) n·σ`, not for the
/// ring's `−2α n·σ`; reported next to [`solve_beta`] for comparison only.
pub fn alt_cone_angle(alpha: f64, chi_tilt: f64) -> Result<ConeAngle> {
    let (s, c) = chi_tilt.sin_cos();
    if alpha == 0.0 {
        return Ok(ConeAngle {
            angle: 0.0,
            limiting: false,
        });
    }
    branch_angle(alpha * s, alpha * c - 1.0)
}

/// Spin cone angle in Stern's geometry.
pub fn stern_cone(scenario: &SternScenario) -> Result<ConeAngle> {
    branch_angle(2.0 * scenario.b_phi, scenario.omega + 2.0 * scenario.b_z)
}

/// Alternative relation `tan χ = μB_φ/(ħω + μB_z)`, kept for side-by-side reports.
pub fn alt_stern_cone(scenario: &SternScenario) -> Result<ConeAngle> {
    branch_angle(scenario.b_phi, scenario.omega + scenario.b_z)
}

/// `π(1 ± cos χ)`: half the solid angle of the cone (or of its complement).
pub fn stern_geometric_phase(chi_cone: f64, branch: Branch) -> f64 {
    PI * (1.0 + branch.sign() * chi_cone.cos())
}

/// Eigenspinors of `Î = −sinφ sinχ σ₁ + cosφ sinχ σ₂ + cosχ σ₃`:
/// `(e^{−iφ}cos(χ/2), i sin(χ/2))` and `(−e^{−iφ}sin(χ/2), i cos(χ/2))`.
pub fn stern_eigenspinor(chi_cone: f64, phi: f64, branch: Branch) -> Spinor {
    let (s, c) = (0.5 * chi_cone).sin_cos();
    let rot = C64::from_polar(1.0, -phi);
    match branch {
        Branch::Plus => Spinor::new(rot * c, C64::new(0.0, s)),
        Branch::Minus => Spinor::new(-rot * s, C64::new(0.0, c)),
    }
}

/// An invariant `Î(φ) = m(φ)·σ` with `m` at polar angle `beta` and azimuth
/// `φ + azimuth_offset`, together with the chosen eigen-branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSolution {
    pub beta: f64,
    pub azimuth_offset: f64,
    pub branch: Branch,
    pub limiting: bool,
    pub scenario: Scenario,
}

impl InvariantSolution {
    /// AC-ring invariant with an explicit cone angle (used to probe wrong angles).
    pub fn ring_with_beta(scenario: ACRingScenario, beta: f64, branch: Branch) -> Self {
        Self {
            beta,
            azimuth_offset: 0.0,
            branch,
            limiting: false,
            scenario: Scenario::AcRing(scenario),
        }
    }

    pub fn for_scenario(scenario: &Scenario, branch: Branch) -> Result<Self> {
        let (cone, offset) = match scenario {
            Scenario::AcRing(s) => (solve_beta(s.alpha, s.chi_tilt)?, 0.0),
            Scenario::Stern(s) => (stern_cone(s)?, FRAC_PI_2),
            Scenario::Combined(_) => {
                // axis φ̇ẑ − 2h in the frame where φ = 0
                let h = scenario.generator(0.0).vector();
                let rate = scenario.angular_rate();
                let axis = [-2.0 * h[0], -2.0 * h[1], rate - 2.0 * h[2]];
                let rho = axis[0].hypot(axis[1]);
                let offset = if rho > 0.0 { axis[1].atan2(axis[0]) } else { 0.0 };
                (branch_angle(rho, axis[2])?, offset)
            }
        };
        Ok(Self {
            beta: cone.angle,
            azimuth_offset: offset,
            branch,
            limiting: cone.limiting,
            scenario: *scenario,
        })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.scenario.kind()
    }

    /// Unit axis `m(φ)` of `Î(φ)`.
    pub fn axis(&self, phi: f64) -> [f64; 3] {
        let (sb, cb) = self.beta.sin_cos();
        let (sp, cp) = (phi + self.azimuth_offset).sin_cos();
        [sb * cp, sb * sp, cb]
    }

    pub fn operator(&self, phi: f64) -> HermitianObservable {
        HermitianObservable::from_vector(self.axis(phi))
    }

    /// `∂Î/∂λ` in the natural evolution parameter λ.
    pub fn operator_derivative(&self, phi: f64) -> HermitianObservable {
        let rate = self.scenario.angular_rate();
        let sb = self.beta.sin();
        let (sp, cp) = (phi + self.azimuth_offset).sin_cos();
        HermitianObservable::from_vector([-rate * sb * sp, rate * sb * cp, 0.0])
    }

    pub fn eigenspinor(&self, phi: f64) -> Spinor {
        match self.kind() {
            ScenarioKind::Stern => stern_eigenspinor(self.beta, phi, self.branch),
            _ => cone_eigenspinor(self.beta, phi + self.azimuth_offset, self.branch),
        }
    }
}

fn cone_eigenspinor(beta: f64, azimuth: f64, branch: Branch) -> Spinor {
    let (s, c) = (0.5 * beta).sin_cos();
    match branch {
        Branch::Plus => Spinor::new(C64::new(c, 0.0), C64::from_polar(s, azimuth)),
        Branch::Minus => Spinor::new(C64::from_polar(-s, -azimuth), C64::new(c, 0.0)),
    }
}

/// AC-ring invariant for the cone angle from [`solve_beta`].
pub fn ring_solution(alpha: f64, chi_tilt: f64, branch: Branch) -> Result<InvariantSolution> {
    InvariantSolution::for_scenario(&Scenario::AcRing(ACRingScenario::new(alpha, chi_tilt)), branch)
}

/// `(cos(β/2), e^{iφ} sin(β/2))` for `+`, `(−e^{−iφ} sin(β/2), cos(β/2))` for `−`
/// (rotated by the solution's azimuth offset, which is zero on the AC ring).
pub fn eigenspinor(sol: &InvariantSolution, phi: f64) -> Spinor {
    sol.eigenspinor(phi)
}

/// Largest Frobenius norm of `iħ ∂Î + [Î, Ĥ]` over the ring angles in `grid`.
pub fn liouville_residual(sol: &InvariantSolution, grid: &[f64]) -> f64 {
    let rate = sol.scenario.angular_rate();
    let i = C64::new(0.0, 1.0);
    grid.iter()
        .map(|&phi| {
            let inv = sol.operator(phi).matrix();
            let ham = sol.scenario.generator(phi / rate).matrix();
            let d_inv = sol.operator_derivative(phi).matrix();
            let comm = inv.mul(&ham).add(&ham.mul(&inv).scale(C64::new(-1.0, 0.0)));
            d_inv.scale(i).add(&comm).frobenius_norm()
        })
        .fold(0.0, f64::max)
}

/// Evenly spaced ring angles on `[0, 2π]`, endpoints included.
pub fn ring_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| 2.0 * PI * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `Θ_dyn = −(1/ħ)∫⟨Ĥ⟩`, `Θ_geo = ∫⟨Ψ̃|i∂|Ψ̃⟩` (the two terms of the exact-solution exponent).
    ExponentTerms,
}

/// Closed-form phases for one revolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPhases {
    pub dynamical: f64,
    pub geometric: f64,
    /// Part of `dynamical` due to the spin–orbit (AC) potential.
    pub dynamical_ac: f64,
    pub branch: Branch,
    pub cone_angle: f64,
    pub limiting: bool,
    pub convention: PhaseConvention,
}

impl AnalyticPhases {
    pub fn total(&self) -> f64 {
        self.dynamical + self.geometric
    }
}

/// Phases of the invariant eigenstate over one revolution, in closed form.
pub fn analytic_phases(sol: &InvariantSolution) -> AnalyticPhases {
    let s = sol.branch.sign();
    let span = sol.scenario.revolution();
    // ⟨Ĥ⟩ is constant along the orbit because m and h co-rotate.
    let m = sol.axis(0.0);
    let dot = |o: &HermitianObservable| o.c0 + s * (m[0] * o.cx + m[1] * o.cy + m[2] * o.cz);
    let dynamical = -span * dot(&sol.scenario.generator(0.0));
    let dynamical_ac = -span * dot(&sol.scenario.ac_generator(0.0));
    let geometric = match sol.kind() {
        ScenarioKind::Stern => stern_geometric_phase(sol.beta, sol.branch),
        _ => s * (sol.beta.cos() - 1.0) * PI,
    };
    AnalyticPhases {
        dynamical,
        geometric,
        dynamical_ac,
        branch: sol.branch,
        cone_angle: sol.beta,
        limiting: sol.limiting,
        convention: PhaseConvention::ExponentTerms,
    }
}

/// `Θ_dyn = ±4πα cos(χ − β)`, `Θ_geo = ±(cos β − 1)π` on the AC ring.
pub fn analytic_phases_ac(alpha: f64, chi_tilt: f64, branch: Branch) -> Result<AnalyticPhases> {
    let sol = ring_solution(alpha, chi_tilt, branch)?;
    let s = branch.sign();
    let beta = sol.beta;
    let dynamical = s * 4.0 * PI * alpha * (chi_tilt - beta).cos();
    Ok(AnalyticPhases {
        dynamical,
        geometric: s * (beta.cos() - 1.0) * PI,
        dynamical_ac: dynamical,
        branch,
        cone_angle: beta,
        limiting: sol.limiting,
        convention: PhaseConvention::ExponentTerms,
    })
}

/// Other published forms of the AC phases, evaluated at the consistent β so a
/// report can show the differences next to the computed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceForms {
    /// `±2πα cos(χ − β)`: half the value of the defining integral.
    pub dynamical_half_coefficient: f64,
    /// `−∫⟨Ψ̃|i∂|Ψ̃⟩`, the geometric term with the opposite sign convention.
    pub geometric_opposite_sign: f64,
    /// β from `tan β = α sinχ/(α cosχ − 1)`.
    pub alt_cone_angle: f64,
}

pub fn reference_forms_ac(alpha: f64, chi_tilt: f64, branch: Branch) -> Result<ReferenceForms> {
    let phases = analytic_phases_ac(alpha, chi_tilt, branch)?;
    Ok(ReferenceForms {
        dynamical_half_coefficient: 0.5 * phases.dynamical,
        geometric_opposite_sign: -phases.geometric,
        alt_cone_angle: alt_cone_angle(alpha, chi_tilt)?.angle,
    })
}

/// `Î·Ψ̃ − λΨ̃` residual used by tests and the check suite.
pub fn eigen_residual(op: &Matrix2, s: &Spinor, eigenvalue: f64) -> f64 {
    let img = op.apply(s);
    let d0 = img.c0 - s.c0 * eigenvalue;
    let d1 = img.c1 - s.c1 * eigenvalue;
    (d0.norm_sqr() + d1.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinor::{bloch, overlap};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4};

    /// Independent root finder on `sinβ − 4α sin(χ − β)`, restricted to `[0, π)`.
    fn bisection_oracle(alpha: f64, chi: f64) -> f64 {
        let f = |b: f64| b.sin() - 4.0 * alpha * (chi - b).sin();
        // scan for a sign change, then bisect
        let n = 10_000;
        let mut lo = 0.0;
        let mut hi = PI;
        for k in 0..n {
            let a = PI * k as f64 / n as f64;
            let b = PI * (k + 1) as f64 / n as f64;
            if f(a) == 0.0 {
                return a;
            }
            if f(a).signum() != f(b).signum() {
                lo = a;
                hi = b;
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Central finite difference of Î in φ.
    fn fd_derivative(sol: &InvariantSolution, phi: f64) -> Matrix2 {
        let h = 1e-5;
        let rate = sol.scenario.angular_rate();
        let plus = sol.operator(phi + h).matrix();
        let minus = sol.operator(phi - h).matrix();
        plus.add(&minus.scale(C64::new(-1.0, 0.0)))
            .scale(C64::new(rate / (2.0 * h), 0.0))
    }

    #[test]
    fn solve_beta_examples() {
        assert_eq!(solve_beta(0.0, 0.7).unwrap().angle, 0.0);

        // consistent relation at α = 1, χ = π/2: tan β = 4
        let b = solve_beta(1.0, FRAC_PI_2).unwrap();
        assert!((b.angle - 4f64.atan()).abs() < 1e-15);
        // the alternative relation reproduces tan β = −1 → 3π/4
        let alt = alt_cone_angle(1.0, FRAC_PI_2).unwrap();
        assert!((alt.angle - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let (a, chi) = (1.0, FRAC_PI_2);
        let printed = a - alt.angle.tan() / (chi.cos() * alt.angle.tan() - chi.sin());
        assert!(printed.abs() < 1e-12);

        let b = solve_beta(0.3, 0.5).unwrap();
        assert!((b.angle - bisection_oracle(0.3, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn solve_beta_limits_and_errors() {
        // 1 + 4α cosχ = 0 at α = 1/2, χ = 2π/3
        let chi = (-0.5f64).acos();
        let b = solve_beta(0.5, chi).unwrap();
        assert!(b.limiting);
        assert_eq!(b.angle, FRAC_PI_2);
        assert!(solve_beta(-0.1, 0.3).is_err());
        assert!(solve_beta(f64::NAN, 0.3).is_err());
        // χ = π with strong coupling: the tan relation gives β = π, mapped to 0
        assert_eq!(solve_beta(2.0, PI).unwrap().angle, 0.0);
    }

    #[test]
    fn eigenspinor_examples() {
        let sol = ring_solution(0.0, 0.4, Branch::Plus).unwrap();
        for phi in [0.0, 1.0, 4.0] {
            assert_eq!(eigenspinor(&sol, phi), Spinor::up());
        }
        let s = ACRingScenario::new(0.3, 0.5);
        let anti = InvariantSolution::ring_with_beta(s, PI, Branch::Plus);
        let psi = eigenspinor(&anti, 0.8);
        assert!(psi.c0.norm() < 1e-16);
        assert!((psi.c1 - C64::from_polar(1.0, 0.8)).norm() < 1e-15);

        let half = InvariantSolution::ring_with_beta(s, FRAC_PI_2, Branch::Minus);
        let psi = eigenspinor(&half, 0.0);
        assert!((psi.c0 - C64::new(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((psi.c1 - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn liouville_residual_examples() {
        let grid = ring_grid(257);
        let sol = ring_solution(0.3, 0.5, Branch::Plus).unwrap();
        assert!(liouville_residual(&sol, &grid) <= 1e-10);

        // finite-difference ∂φ Î agrees with the analytic derivative
        for &phi in grid.iter().step_by(32) {
            let fd = fd_derivative(&sol, phi);
            let exact = sol.operator_derivative(phi).matrix();
            assert!(fd.distance(&exact) < 1e-9);
        }

        let wrong = InvariantSolution::ring_with_beta(ACRingScenario::new(0.3, 0.5), sol.beta + 0.1, Branch::Plus);
        assert!(liouville_residual(&wrong, &grid) > 1e-3);

        let free = ring_solution(0.0, 0.5, Branch::Plus).unwrap();
        assert!(liouville_residual(&free, &grid) <= 1e-14);

        // the alternative relation does not give an invariant of the ring generator
        let alt = alt_cone_angle(0.3, 0.5).unwrap().angle;
        let alt_sol = InvariantSolution::ring_with_beta(ACRingScenario::new(0.3, 0.5), alt, Branch::Plus);
        assert!(liouville_residual(&alt_sol, &grid) > 1e-1);
    }

    #[test]
    fn analytic_phases_ac_examples() {
        let p = analytic_phases_ac(0.0, 0.5, Branch::Plus).unwrap();
        assert_eq!((p.dynamical, p.geometric), (0.0, 0.0));

        let s = ACRingScenario::new(0.3, 0.5);
        let half = InvariantSolution::ring_with_beta(s, FRAC_PI_2, Branch::Plus);
        assert!((analytic_phases(&half).geometric + PI).abs() < 1e-15);

        // generic route and the closed forms agree
        let sol = ring_solution(0.3, 0.5, Branch::Plus).unwrap();
        let g = analytic_phases(&sol);
        let c = analytic_phases_ac(0.3, 0.5, Branch::Plus).unwrap();
        assert!((g.dynamical - c.dynamical).abs() < 1e-13);
        assert!((g.geometric - c.geometric).abs() < 1e-15);
    }

    #[test]
    fn stern_cone_examples() {
        assert_eq!(stern_cone(&SternScenario::new(0.0, 1.0, 0.3)).unwrap().angle, 0.0);

        // adiabatic limit ħω ≪ μB_z
        let s = SternScenario::new(0.7, 1.0, 1e-6);
        assert!((stern_cone(&s).unwrap().angle - 0.7f64.atan()).abs() < 1e-6);

        // 2μB_φ = ħω + 2μB_z → π/4 for the consistent relation
        let s = SternScenario::new(1.25, 1.0, 0.5);
        assert!((stern_cone(&s).unwrap().angle - FRAC_PI_4).abs() < 1e-15);
        // μB_φ = ħω + μB_z → π/4 for the alternative relation
        let s = SternScenario::new(1.5, 1.0, 0.5);
        assert!((alt_stern_cone(&s).unwrap().angle - FRAC_PI_4).abs() < 1e-15);

        // denominator zero
        let s = SternScenario::new(0.4, -0.25, 0.5);
        let c = stern_cone(&s).unwrap();
        assert!(c.limiting && c.angle == FRAC_PI_2);
        assert!(stern_cone(&SternScenario::new(0.0, -0.25, 0.5)).is_err());
    }

    #[test]
    fn stern_geometric_phase_examples() {
        assert!((stern_geometric_phase(0.0, Branch::Plus) - 2.0 * PI).abs() < 1e-15);
        assert!((stern_geometric_phase(FRAC_PI_2, Branch::Plus) - PI).abs() < 1e-15);
        assert!((stern_geometric_phase(FRAC_PI_2, Branch::Minus) - PI).abs() < 1e-15);
        assert!((stern_geometric_phase(FRAC_PI_3, Branch::Minus) - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn stern_eigenspinor_examples() {
        let s = stern_eigenspinor(0.0, 0.9, Branch::Plus);
        assert!((s.c0 - C64::from_polar(1.0, -0.9)).norm() < 1e-16);
        assert_eq!(s.c1.norm(), 0.0);
        let s = stern_eigenspinor(PI, 0.0, Branch::Plus);
        assert!(s.c0.norm() < 1e-16);
        assert!((s.c1 - C64::new(0.0, 1.0)).norm() < 1e-16);

        for (chi, phi) in [(0.3, 1.7), (1.2, -2.2), (2.9, 5.0)] {
            let (sc, cc) = f64::sin_cos(chi);
            let (sp, cp) = f64::sin_cos(phi);
            let inv = HermitianObservable::from_vector([-sp * sc, cp * sc, cc]).matrix();
            for b in [Branch::Plus, Branch::Minus] {
                let psi = stern_eigenspinor(chi, phi, b);
                assert!(eigen_residual(&inv, &psi, b.sign()) < 1e-12);
            }
        }
    }

    #[test]
    fn stern_invariant_satisfies_liouville() {
        let sc = Scenario::Stern(SternScenario::new(0.6, 0.8, 0.45));
        let sol = InvariantSolution::for_scenario(&sc, Branch::Plus).unwrap();
        assert!(liouville_residual(&sol, &ring_grid(129)) < 1e-12);
        let sc = SternScenario::new(0.6, 0.8, 0.45);
        let alt = alt_stern_cone(&sc).unwrap().angle;
        let mut wrong = sol;
        wrong.beta = alt;
        assert!(liouville_residual(&wrong, &ring_grid(129)) > 1e-2);
    }

    #[test]
    fn combined_invariant_reduces_to_pure_cases() {
        use crate::fields::CombinedScenario;
        let c = CombinedScenario {
            alpha: 0.3,
            chi_tilt: 0.5,
            ab_flux: 0.0,
            b_phi: 0.0,
            b_z: 0.0,
            omega: 0.7,
            radius: 1.0,
        };
        let sol = InvariantSolution::for_scenario(&Scenario::Combined(c), Branch::Plus).unwrap();
        assert!((sol.beta - solve_beta(0.3, 0.5).unwrap().angle).abs() < 1e-14);

        let c = CombinedScenario { alpha: 0.0, b_phi: 0.6, b_z: 0.8, ..c };
        let sol = InvariantSolution::for_scenario(&Scenario::Combined(c), Branch::Plus).unwrap();
        let stern = stern_cone(&c.zeeman()).unwrap().angle;
        assert!((sol.beta - stern).abs() < 1e-14);
        assert!((sol.azimuth_offset - FRAC_PI_2).abs() < 1e-15);

        let c = CombinedScenario { alpha: 0.25, chi_tilt: 1.1, b_phi: 0.6, b_z: -0.3, ..c };
        let sol = InvariantSolution::for_scenario(&Scenario::Combined(c), Branch::Minus).unwrap();
        assert!(liouville_residual(&sol, &ring_grid(129)) < 1e-12);
    }

    #[test]
    fn eigenspinor_is_periodic_and_normalized() {
        let sol = ring_solution(0.45, 1.1, Branch::Minus).unwrap();
        let a = eigenspinor(&sol, 0.0);
        let b = eigenspinor(&sol, 2.0 * PI);
        assert!((a.c0 - b.c0).norm() < 1e-14 && (a.c1 - b.c1).norm() < 1e-14);
        assert!((a.norm() - 1.0).abs() < 1e-15);
        assert!((overlap(&a, &a).re - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn residual_vanishes_on_grid(alpha in 0.0..3.0f64, chi in 0.0..PI) {
            let sol = ring_solution(alpha, chi, Branch::Plus).unwrap();
            prop_assume!(!sol.limiting);
            prop_assert!(liouville_residual(&sol, &ring_grid(65)) <= 1e-10);
        }

        #[test]
        fn eigen_equation_holds(alpha in 0.0..3.0f64, chi in 0.0..PI, phi in -7.0..7.0f64) {
            for b in [Branch::Plus, Branch::Minus] {
                let sol = ring_solution(alpha, chi, b).unwrap();
                let psi = eigenspinor(&sol, phi);
                prop_assert!((psi.norm() - 1.0).abs() < 1e-14);
                prop_assert!(eigen_residual(&sol.operator(phi).matrix(), &psi, b.sign()) < 1e-12);
            }
        }

        #[test]
        fn branch_antisymmetry(alpha in 0.0..3.0f64, chi in 0.0..PI) {
            let p = analytic_phases_ac(alpha, chi, Branch::Plus).unwrap();
            let m = analytic_phases_ac(alpha, chi, Branch::Minus).unwrap();
            prop_assert!((p.geometric + m.geometric).abs() < 1e-12);
            prop_assert!((p.dynamical + m.dynamical).abs() < 1e-12);
        }

        #[test]
        fn bloch_vector_sits_on_cone(alpha in 0.0..3.0f64, chi in 0.01..3.1f64, phi in 0.0..6.2f64) {
            let sol = ring_solution(alpha, chi, Branch::Plus).unwrap();
            prop_assume!(sol.beta > 1e-3);
            let n = bloch(&eigenspinor(&sol, phi));
            prop_assert!((n.polar() - sol.beta).abs() < 1e-12);
            let dphi = (n.azimuth() - phi).rem_euclid(2.0 * PI);
            prop_assert!(dphi.min(2.0 * PI - dphi) < 1e-12);
        }

        #[test]
        fn stern_cone_monotone_in_b_phi(bz in -1.0..1.0f64, omega in 2.1..5.0f64, b1 in 0.0..3.0f64, db in 1e-3..1.0f64) {
            let lo = stern_cone(&SternScenario::new(b1, bz, omega)).unwrap().angle;
            let hi = stern_cone(&SternScenario::new(b1 + db, bz, omega)).unwrap().angle;
            prop_assert!(hi > lo);
        }
    }
}
