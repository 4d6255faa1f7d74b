//! Acceptance suite: one function per criterion, each returning a pass/fail
//! line with the measured numbers. Shared by the integration tests and the
//! CLI's `check` verb, and sized to finish in well under a minute.

use std::fmt;

use crate::classical::{faraday_compare, precess, stern_si_estimate, SternSiInput};
use crate::config::{parse_config, Config};
use crate::error::Result;
use crate::fields::{ACRingScenario, CombinedScenario, DriveProtocol, Param, Scenario, SternScenario, UnitSystem};
use crate::invariant::{
    analytic_phases_ac, liouville_residual, reference_forms_ac, ring_grid, ring_solution, stern_cone,
    stern_geometric_phase, Branch, InvariantSolution,
};
use crate::propagator::{convergence_probe, phase_distance, propagate, propagate_ring, propagate_stern};
use crate::runner::sweep_table;
use crate::spinor::{Spinor, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome { id, name, passed, detail }
}

const ALPHAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const TILTS: [f64; 5] = [0.2, 0.5, 0.8, 1.1, 1.4];
const ORACLE_STEPS: usize = 8192;

/// Criterion 1: the invariant satisfies the Liouville equation on the grid.
pub fn invariant_residuals() -> CheckOutcome {
    outcome(1, "invariant verification", (|| {
        let grid = ring_grid(257);
        let mut worst = 0.0f64;
        for a in ALPHAS {
            for chi in TILTS {
                for b in [Branch::Plus, Branch::Minus] {
                    worst = worst.max(liouville_residual(&ring_solution(a, chi, b)?, &grid));
                }
            }
        }
        Ok((worst <= 1e-10, format!("max residual {worst:.3e} (limit 1e-10) on 5x5 grid")))
    })())
}

/// Criterion 2: propagated AC phases equal the closed forms.
pub fn ac_oracle() -> CheckOutcome {
    outcome(2, "oracle equivalence (AC ring)", (|| {
        let (mut geo, mut dyn_, mut half, mut flipped) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for a in ALPHAS {
            for chi in TILTS {
                for b in [Branch::Plus, Branch::Minus] {
                    let sol = ring_solution(a, chi, b)?;
                    let d = propagate_ring(&ACRingScenario::new(a, chi), sol.eigenspinor(0.0), ORACLE_STEPS)?
                        .decompose();
                    let exact = analytic_phases_ac(a, chi, b)?;
                    let alt = reference_forms_ac(a, chi, b)?;
                    geo = geo.max((d.geometric - exact.geometric).abs());
                    dyn_ = dyn_.max((d.dynamical - exact.dynamical).abs());
                    half = half.max((d.dynamical - alt.dynamical_half_coefficient).abs());
                    flipped = flipped.max((d.geometric - alt.geometric_opposite_sign).abs());
                }
            }
        }
        let pass = geo <= 1e-6 && dyn_ <= 1e-6;
        Ok((
            pass,
            format!(
                "max |geo - (cos b - 1)pi| {geo:.2e}, max |dyn - 4 pi a cos(chi - b)| {dyn_:.2e} (limit 1e-6); \
                 half-coefficient form off by up to {half:.3}, opposite-sign geometric off by up to {flipped:.3}"
            ),
        ))
    })())
}

/// Criterion 3: Stern geometric phase and the adiabatic limit of the cone.
pub fn stern_oracle() -> CheckOutcome {
    outcome(3, "oracle equivalence (Stern)", (|| {
        let cases = [(0.6, 0.8, 0.45), (0.3, -0.2, 1.3), (1.5, 0.4, 0.9), (0.2, 2.0, 0.3)];
        let mut worst = 0.0f64;
        for (bp, bz, w) in cases {
            let sc = SternScenario::new(bp, bz, w);
            let chi = stern_cone(&sc)?.angle;
            for b in [Branch::Plus, Branch::Minus] {
                let sol = InvariantSolution::for_scenario(&Scenario::Stern(sc), b)?;
                let d = propagate_stern(&sc, sol.eigenspinor(0.0), ORACLE_STEPS, sc.period())?.decompose();
                worst = worst.max(phase_distance(d.geometric, stern_geometric_phase(chi, b)));
            }
        }
        let mut adiabatic = 0.0f64;
        for bp in [0.1, 0.5, 1.0, 3.0] {
            let sc = SternScenario::new(bp, 1.0, 1e-3);
            adiabatic = adiabatic.max((stern_cone(&sc)?.angle - bp.atan()).abs());
        }
        Ok((
            worst <= 1e-6 && adiabatic <= 2e-3,
            format!(
                "max |geo - pi(1 +/- cos chi)| mod 2pi {worst:.2e} (limit 1e-6); \
                 adiabatic |chi - atan(Bphi/Bz)| {adiabatic:.2e} (limit 2e-3)"
            ),
        ))
    })())
}

fn stern_ramp() -> Result<(Scenario, DriveProtocol)> {
    Ok((
        Scenario::Stern(SternScenario::new(0.0, 0.8, 0.45)),
        DriveProtocol::linear(Param::BPhi, 0.0, 1.0, 40.0)?,
    ))
}

fn alpha_ramp() -> Result<(Scenario, DriveProtocol)> {
    Ok((
        Scenario::AcRing(ACRingScenario::new(0.1, 0.5)),
        DriveProtocol::linear(Param::Alpha, 0.1, 0.6, 10.0)?,
    ))
}

const RAMP_SAMPLES: usize = 17;
const RAMP_STEPS: usize = 2048;

/// Criterion 4: force and flux routes agree; AB-only drives obey Faraday's law.
pub fn generalized_faraday() -> CheckOutcome {
    outcome(4, "generalized Faraday law", (|| {
        let mut parts = Vec::new();
        let mut pass = true;
        for (label, (sc, drive)) in [("Stern B_phi ramp", stern_ramp()?), ("AC alpha ramp", alpha_ramp()?)] {
            let r = faraday_compare(&sc, Branch::Plus, &drive, RAMP_SAMPLES, RAMP_STEPS)?;
            let rel = r.relative_discrepancy();
            pass &= rel <= 1e-4 && r.max_flux > 0.0;
            parts.push(format!("{label} max|force - flux|/max|flux| {rel:.2e}"));
        }
        let sc = Scenario::AcRing(ACRingScenario::new(0.0, 0.5));
        let drive = DriveProtocol::new(Param::AbFlux, vec![(0.0, 0.0), (1.0, 2.0), (3.0, -1.0)])?;
        let r = faraday_compare(&sc, Branch::Plus, &drive, 25, 64)?;
        let (eh, eh2) = r.ordinary_faraday_errors()?;
        let halving_ok = eh2 <= eh / 3.5 || eh2 <= 1e-10;
        pass &= halving_ok && r.max_discrepancy <= 1e-10;
        parts.push(format!("AB-only errors at h, h/2: {eh:.1e}, {eh2:.1e}"));
        Ok((pass, format!("{} (limit 1e-4)", parts.join("; "))))
    })())
}

/// Criterion 5: the dynamical-phase force plus the geometric and AB terms rebuilds the flux force.
pub fn dynamical_force_contrast() -> CheckOutcome {
    outcome(5, "dynamical-only force contrast", (|| {
        let mut worst = 0.0f64;
        let mut parts = Vec::new();
        for (label, (sc, drive)) in [("Stern", stern_ramp()?), ("AC", alpha_ramp()?)] {
            let r = faraday_compare(&sc, Branch::Plus, &drive, RAMP_SAMPLES, RAMP_STEPS)?;
            worst = worst.max(r.additivity_error());
            let gap = r
                .eps_dynamical
                .iter()
                .zip(&r.eps_flux)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            parts.push(format!("{label} max|eps_dyn - eps_flux| {gap:.3e}"));
        }
        Ok((
            worst <= 1e-8,
            format!("ledger additivity error {worst:.2e} (limit 1e-8 relative); {}", parts.join("; ")),
        ))
    })())
}

/// Criterion 6: laboratory-scale numbers.
pub fn si_estimates() -> CheckOutcome {
    outcome(6, "SI estimates", (|| {
        let units = UnitSystem::si();
        let mu_b = units.mu() * 1.0;
        let mu_ok = (mu_b / 9.27e-24 - 1.0).abs() <= 5e-3;
        let est = stern_si_estimate(&SternSiInput::reference(), &units, Branch::Plus)?;
        let decades = (est.amplitude_volts / 1e-7).log10().abs();
        Ok((
            mu_ok && decades <= 1.0,
            format!(
                "mu*1T = {mu_b:.4e} J (target 9.27e-24 within 0.5%); ramp amplitude {:.3e} V, {decades:.2} decades from 1e-7 V",
                est.amplitude_volts
            ),
        ))
    })())
}

const SWEEP_TEXT: &str = "[scenario]\nkind = \"ac_ring\"\nalpha = 0.3\nchi_tilt = 0.5\n[integrator]\nsteps = 1024\n\
                          [sweep]\nparameter = \"alpha\"\nfrom = 0.0\nto = 0.9\ncount = 12\n";

/// Criterion 7: norm preservation, second-order convergence, deterministic sweeps.
pub fn numerics_hygiene() -> CheckOutcome {
    outcome(7, "numerics hygiene", (|| {
        let psi = Spinor::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let combined = Scenario::Combined(CombinedScenario {
            alpha: 0.4,
            chi_tilt: 0.9,
            ab_flux: 0.0,
            b_phi: 0.7,
            b_z: -0.3,
            omega: 0.8,
            radius: 1.0,
        });
        let scenarios = [
            Scenario::AcRing(ACRingScenario::new(0.9, 1.4)),
            Scenario::Stern(SternScenario::new(1.5, 0.4, 0.9)),
            combined,
        ];
        let mut norm = 0.0f64;
        for sc in &scenarios {
            norm = norm.max(propagate(sc, psi, ORACLE_STEPS, 0.0, 3.0 * sc.revolution())?.norm_drift());
            let s = precess([0.3, -0.2, 0.1], sc, sc.angular_rate(), 20.0, 4000)?;
            norm = norm.max(s.length_drift());
        }

        let sol = ring_solution(0.3, 0.5, Branch::Plus)?;
        let rows = convergence_probe(&Scenario::AcRing(ACRingScenario::new(0.3, 0.5)), sol.eigenspinor(0.0), &[256, 512, 1024])?;
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
        let ratios_ok = !ratios.is_empty() && ratios.iter().all(|r| (3.5..=4.5).contains(r));

        let Config::Sweep(sweep) = parse_config(SWEEP_TEXT)? else {
            unreachable!("the text has a [sweep] section")
        };
        let reference = sweep_table(&sweep, Some(1))?.to_csv();
        let deterministic = [2, 3, 8].iter().all(|&j| {
            sweep_table(&sweep, Some(j)).map(|t| t.to_csv() == reference).unwrap_or(false)
        });
        let pass = norm <= 1e-12 && ratios_ok && deterministic;
        Ok((
            pass,
            format!(
                "max norm drift {norm:.1e} (limit 1e-12); convergence ratios {} (band [3.5, 4.5]); \
                 sweep CSV identical for jobs 1,2,3,8: {deterministic}",
                ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
            ),
        ))
    })())
}

/// All criteria in order.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        invariant_residuals(),
        ac_oracle(),
        stern_oracle(),
        generalized_faraday(),
        dynamical_force_contrast(),
        si_estimates(),
        numerics_hygiene(),
    ]
}
