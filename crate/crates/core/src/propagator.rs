//! Numerical evolution with per-step exact unitaries and a model-independent
//! split of the accumulated phase.
//!
//! Each step applies `exp(−i Ĥ(λ_mid) Δ)` with the generator evaluated at the
//! interval midpoint. The scheme is second order and preserves the norm to
//! rounding. Phases use the same convention as [`crate::invariant`]:
//! `Θ_dyn = −∫⟨Ĥ⟩` and `Θ_geo = Θ_total − Θ_dyn`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ACRingScenario, Scenario, SternScenario};
use crate::format::num;
use crate::spinor::{bloch, exp_unitary, expectation, overlap, HermitianObservable, Spinor};

/// Smallest accepted step count.
pub const MIN_STEPS: usize = 16;
/// Trajectories whose defect exceeds this are not treated as cyclic.
pub const CYCLIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    MidpointExponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTrajectory {
    /// Evolution parameter: ring angle on the AC ring, time otherwise.
    pub params: Vec<f64>,
    pub states: Vec<Spinor>,
    pub steps: usize,
    pub scenario: Scenario,
    pub integrator: Integrator,
}

impl QuantumTrajectory {
    pub fn initial(&self) -> &Spinor {
        &self.states[0]
    }

    pub fn last(&self) -> &Spinor {
        self.states.last().expect("trajectory has at least two samples")
    }

    /// Largest `|‖ψ‖ − 1|` over the samples.
    pub fn norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn cyclicity_defect(&self) -> f64 {
        // Clamped: unit-norm rounding can push the overlap a hair above 1.
        (1.0 - overlap(self.initial(), self.last()).norm()).max(0.0)
    }

    /// Phase split using the scenario's own generator.
    pub fn decompose(&self) -> PhaseDecomposition {
        let sc = self.scenario;
        decompose_phases(self, |p| sc.generator(p))
    }

    /// CSV with header `param,re0,im0,re1,im1,sx,sy,sz`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "param,re0,im0,re1,im1,sx,sy,sz")?;
        for (p, s) in self.params.iter().zip(&self.states) {
            let n = bloch(s);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(*p),
                num(s.c0.re),
                num(s.c0.im),
                num(s.c1.re),
                num(s.c1.im),
                num(n.nx),
                num(n.ny),
                num(n.nz)
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        buf.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_inputs(psi0: &Spinor, steps: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::Domain(format!("need at least {MIN_STEPS} steps (got {steps})")));
    }
    if !psi0.is_finite() || (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "initial spinor must have unit norm (got {})",
            psi0.norm()
        )));
    }
    Ok(())
}

/// Evolves `psi0` over `[start, start + span]` in `steps` midpoint-exponential steps.
pub fn propagate(scenario: &Scenario, psi0: Spinor, steps: usize, start: f64, span: f64) -> Result<QuantumTrajectory> {
    check_inputs(&psi0, steps)?;
    if !(span.is_finite() && span > 0.0 && start.is_finite()) {
        return Err(Error::Domain(format!("evolution span must be finite and > 0 (got {span})")));
    }
    let dt = span / steps as f64;
    let mut params = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    params.push(start);
    states.push(psi0);
    let mut psi = psi0;
    for k in 0..steps {
        let mid = start + (k as f64 + 0.5) * dt;
        psi = exp_unitary(&scenario.generator(mid), dt).apply(&psi);
        params.push(start + (k + 1) as f64 * dt);
        states.push(psi);
    }
    Ok(QuantumTrajectory {
        params,
        states,
        steps,
        scenario: *scenario,
        integrator: Integrator::MidpointExponential,
    })
}

/// One revolution of the AC ring, `φ ∈ [0, 2π]`.
pub fn propagate_ring(scenario: &ACRingScenario, psi0: Spinor, steps: usize) -> Result<QuantumTrajectory> {
    propagate_ring_from(scenario, psi0, steps, 0.0)
}

/// One revolution of the AC ring starting at `phi0`.
pub fn propagate_ring_from(scenario: &ACRingScenario, psi0: Spinor, steps: usize, phi0: f64) -> Result<QuantumTrajectory> {
    propagate(&Scenario::AcRing(*scenario), psi0, steps, phi0, 2.0 * PI)
}

/// Stern's two-level equation on `t ∈ [0, duration]` with `φ = ωt`.
pub fn propagate_stern(scenario: &SternScenario, psi0: Spinor, steps: usize, duration: f64) -> Result<QuantumTrajectory> {
    propagate(&Scenario::Stern(*scenario), psi0, steps, 0.0, duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDecomposition {
    /// `dynamical + geometric`.
    pub total: f64,
    pub dynamical: f64,
    /// Branch chosen nearest the Bloch-path solid angle.
    pub geometric: f64,
    /// Same value reduced to `(−π, π]`.
    pub geometric_principal: f64,
    /// `∓½` solid angle enclosed by the Bloch path, from the hemisphere it starts in.
    pub solid_angle_estimate: f64,
    /// `Σ arg⟨ψ_k|ψ_{k+1}⟩`, the independent estimate of the dynamical phase.
    pub stepwise_dynamical: f64,
    /// Whether the two dynamical estimates agree within the local error bound.
    pub stepwise_consistent: bool,
    pub cyclicity_defect: f64,
    pub cyclic: bool,
}

/// Maps an angle into `(−π, π]`.
pub fn principal(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Distance between two phases modulo `2π`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    principal(a - b).abs()
}

/// Representative of `x + 2πk` closest to `target`.
pub fn nearest_branch(x: f64, target: f64) -> f64 {
    x + 2.0 * PI * ((target - x) / (2.0 * PI)).round()
}

/// Splits the accumulated phase of `traj` into dynamical and geometric parts.
///
/// `generator` must be the generator that produced the trajectory. The
/// geometric part is only meaningful when `cyclic` is set.
pub fn decompose_phases<G>(traj: &QuantumTrajectory, generator: G) -> PhaseDecomposition
where
    G: Fn(f64) -> HermitianObservable,
{
    let mut dynamical = 0.0;
    let mut stepwise = 0.0;
    let mut bound = 0.0;
    for k in 0..traj.steps {
        let (a, b) = (traj.params[k], traj.params[k + 1]);
        let dt = b - a;
        let h = generator(0.5 * (a + b));
        dynamical -= expectation(&traj.states[k], &h) * dt;
        stepwise += overlap(&traj.states[k], &traj.states[k + 1]).arg();
        bound += (h.magnitude() * dt).abs().powi(3);
    }
    let stepwise_consistent = (dynamical - stepwise).abs() <= bound + 1e-12 * traj.steps as f64;

    let solid = solid_angle_estimate(&traj.states);
    let closure = overlap(traj.initial(), traj.last());
    let principal_value = principal(closure.arg() - dynamical);
    let geometric = nearest_branch(principal_value, solid);
    let defect = 1.0 - closure.norm();
    PhaseDecomposition {
        total: dynamical + geometric,
        dynamical,
        geometric,
        geometric_principal: principal_value,
        solid_angle_estimate: solid,
        stepwise_dynamical: stepwise,
        stepwise_consistent,
        cyclicity_defect: defect,
        cyclic: defect <= CYCLIC_TOLERANCE,
    }
}

/// `−½Σ(1 − cosθ)Δϕ` measured from the north pole, or `+½Σ(1 + cosθ)Δϕ` from
/// the south pole, choosing the pole of the hemisphere the path starts in.
fn solid_angle_estimate(states: &[Spinor]) -> f64 {
    let points: Vec<_> = states.iter().map(bloch).collect();
    let north = points[0].nz >= 0.0;
    let mut acc = 0.0;
    for w in points.windows(2) {
        let dphi = principal(w[1].azimuth() - w[0].azimuth());
        let cos_mid = 0.5 * (w[0].nz / w[0].norm() + w[1].nz / w[1].norm());
        acc += if north {
            -0.5 * (1.0 - cos_mid) * dphi
        } else {
            0.5 * (1.0 + cos_mid) * dphi
        };
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub defect: f64,
    /// `|Θ_total(N) − Θ_total(2N)|`.
    pub drift: f64,
    /// `drift(N/2) / drift(N)` when the previous row was at `N/2`.
    pub ratio: Option<f64>,
}

/// Self-convergence table over one revolution of `scenario`.
pub fn convergence_probe(scenario: &Scenario, psi0: Spinor, steps: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("step counts must increase".into()));
    }
    let span = scenario.revolution();
    let run = |n: usize| -> Result<PhaseDecomposition> {
        Ok(propagate(scenario, psi0, n, 0.0, span)?.decompose())
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(steps.len());
    for &n in steps {
        let coarse = run(n)?;
        let fine = run(2 * n)?;
        let drift = (coarse.total - nearest_branch(fine.total, coarse.total)).abs();
        let ratio = rows
            .last()
            .filter(|prev| prev.steps * 2 == n && drift > 0.0)
            .map(|prev| prev.drift / drift);
        rows.push(ConvergenceRow {
            steps: n,
            defect: coarse.cyclicity_defect,
            drift,
            ratio,
        });
    }
    Ok(rows)
}
