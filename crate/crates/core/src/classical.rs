//! Classical spin in the co-moving frame, the effective U(1) potential it
//! induces, and the comparison of two routes to the motive force.
//!
//! The force route integrates `A + A_eff` around the ring; the flux route
//! differentiates the phase ledger `Φ_T = Φ_AB + Φ_dyn + Φ_geo`. Both are
//! evaluated on the same time grid under a quasi-static drive and reported per
//! unit charge. In internal units `Φ₀ = 2π`, so `ε = −dΦ_T/dt`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{evaluate_drive, DriveProtocol, Param, Scenario, SternScenario, UnitMode, UnitSystem};
use crate::format::num;
use crate::invariant::{analytic_phases, Branch, InvariantSolution};
use crate::propagator::{nearest_branch, propagate};
use crate::spinor::bloch;

pub type Vec3 = [f64; 3];

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn rotate_z(v: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Rodrigues rotation of `v` by `angle` about the unit vector `axis`.
fn rodrigues(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let kxv = cross(axis, v);
    let kdv = dot(axis, v);
    [
        v[0] * c + kxv[0] * s + axis[0] * kdv * (1.0 - c),
        v[1] * c + kxv[1] * s + axis[1] * kdv * (1.0 - c),
        v[2] * c + kxv[2] * s + axis[2] * kdv * (1.0 - c),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSample {
    pub t: f64,
    /// Laboratory-frame spin vector.
    pub spin: Vec3,
    /// Ring angle of the particle.
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSpinTrajectory {
    pub samples: Vec<SpinSample>,
}

impl ClassicalSpinTrajectory {
    /// Largest deviation of `|s|` from its initial value.
    pub fn length_drift(&self) -> f64 {
        let s0 = norm(self.samples[0].spin);
        self.samples
            .iter()
            .map(|p| (norm(p.spin) - s0).abs())
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> &SpinSample {
        self.samples.last().expect("non-empty trajectory")
    }
}

/// Precession rate vector `(e/mc)(B − v×E/c)` at ring angle `phi` for an
/// orbit at angular velocity `omega`. Internally `e/m = 2` and fields are
/// Zeeman energies, so this is `2(B − v×E)`.
pub fn precession_vector(scenario: &Scenario, phi: f64, omega: f64) -> Vec3 {
    let a = scenario.radius();
    let (sp, cp) = phi.sin_cos();
    let v = [-a * omega * sp, a * omega * cp, 0.0];
    let vxe = cross(v, scenario.e_field(phi));
    let b = scenario.b_field(phi);
    [2.0 * (b[0] - vxe[0]), 2.0 * (b[1] - vxe[1]), 2.0 * (b[2] - vxe[2])]
}

/// Integrates `ds/dt = s × (Ω − ω⃗)` in the frame co-rotating with the
/// particle, where `ω⃗ = −ω ẑ` and `Ω` is [`precession_vector`] rotated into
/// that frame. Each step is an exact rotation about the midpoint axis, so
/// `|s|` is conserved. Samples are reported in the laboratory frame.
pub fn precess(s0: Vec3, scenario: &Scenario, omega: f64, duration: f64, steps: usize) -> Result<ClassicalSpinTrajectory> {
    if !(norm(s0) > 0.0 && s0.iter().all(|c| c.is_finite())) {
        return Err(Error::Domain("initial spin must be finite and non-zero".into()));
    }
    if steps == 0 || !(duration.is_finite() && duration >= 0.0) || !omega.is_finite() {
        return Err(Error::Domain("precess needs steps > 0, finite omega and duration >= 0".into()));
    }
    let dt = duration / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(SpinSample { t: 0.0, spin: s0, phi: 0.0 });
    let mut s_rot = s0;
    for k in 0..steps {
        let phi_mid = omega * (k as f64 + 0.5) * dt;
        let field = rotate_z(precession_vector(scenario, phi_mid, omega), -phi_mid);
        let w = [field[0], field[1], field[2] + omega];
        let mag = norm(w);
        if mag > 0.0 {
            s_rot = rodrigues(s_rot, w.map(|c| c / mag), -mag * dt);
        }
        let t = (k + 1) as f64 * dt;
        let phi = omega * t;
        samples.push(SpinSample {
            t,
            spin: rotate_z(s_rot, phi),
            phi,
        });
    }
    Ok(ClassicalSpinTrajectory { samples })
}

/// `A_eff = (1/e) μ⃗×E + (c/ea) s⃗×r̂` at ring angle `phi`, with `μ⃗ = (2μ/ħ) s⃗`.
///
/// The rotation term carries a plus sign: this is the orientation for which
/// its loop integral tracks the geometric phase of the state the spin came from.
pub fn effective_potential(s: Vec3, phi: f64, scenario: &Scenario) -> Vec3 {
    let moment = s.map(|c| 2.0 * c);
    let me = cross(moment, scenario.e_field(phi));
    let rot = rotation_term(s, phi, scenario.radius());
    [me[0] + rot[0], me[1] + rot[1], me[2] + rot[2]]
}

/// `(c/ea) s⃗×r̂`, the frame-rotation part of [`effective_potential`].
pub fn rotation_term(s: Vec3, phi: f64, radius: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    cross(s, [cp, sp, 0.0]).map(|c| c / radius)
}

/// `∮ F(φ)·dl` with `dl = a dφ φ̂`, periodic trapezoid rule on `points` nodes.
pub fn line_integral<F>(field: F, radius: f64, points: usize) -> f64
where
    F: Fn(f64) -> Vec3,
{
    let n = points.max(1);
    let dphi = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let phi = k as f64 * dphi;
            let (sp, cp) = phi.sin_cos();
            dot(field(phi), [-sp, cp, 0.0])
        })
        .sum::<f64>()
        * radius
        * dphi
}

/// `∮ A_eff·dl` for a spin texture `spin(φ)`.
pub fn line_integral_aeff<S>(spin: S, scenario: &Scenario, points: usize) -> f64
where
    S: Fn(f64) -> Vec3,
{
    line_integral(|phi| effective_potential(spin(phi), phi, scenario), scenario.radius(), points)
}

/// Spin texture `(ħ/2)·bloch(Ψ̃(φ))` of an invariant eigenstate.
pub fn synchronous_cone(sol: &InvariantSolution) -> impl Fn(f64) -> Vec3 + '_ {
    move |phi| bloch(&sol.eigenspinor(phi)).as_array().map(|c| 0.5 * c)
}

/// Nodes used for loop integrals of smooth ring textures.
pub const LOOP_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxLedger {
    pub t: f64,
    pub phi_ab: f64,
    pub phi_dyn_ac: f64,
    pub phi_geo: f64,
    /// `Φ_AB + ∮A_eff·dl`, the force-route counterpart of [`FluxLedger::total`].
    pub force_flux: f64,
    pub cyclic: bool,
    pub limiting: bool,
}

impl FluxLedger {
    pub fn total(&self) -> f64 {
        self.phi_ab + self.phi_dyn_ac + self.phi_geo
    }
}

/// Ledger entries for a static scenario: AB flux, spin–orbit dynamical phase in
/// closed form, and the geometric phase from propagating the invariant
/// eigenstate through one revolution with `steps` steps.
pub fn flux_ledger(scenario: &Scenario, branch: Branch, steps: usize, t: f64) -> Result<FluxLedger> {
    let sol = InvariantSolution::for_scenario(scenario, branch)?;
    let analytic = analytic_phases(&sol);
    let decomposition = propagate(scenario, sol.eigenspinor(0.0), steps, 0.0, scenario.revolution())?.decompose();
    let loop_flux = line_integral_aeff(synchronous_cone(&sol), scenario, LOOP_POINTS);
    Ok(FluxLedger {
        t,
        phi_ab: scenario.ab_flux(),
        phi_dyn_ac: analytic.dynamical_ac,
        phi_geo: decomposition.geometric,
        force_flux: scenario.ab_flux() + loop_flux,
        cyclic: decomposition.cyclic,
        limiting: sol.limiting,
    })
}

/// Scenario with the drive's target parameter set to its value at `t`.
pub fn driven_scenario(scenario: &Scenario, drive: &DriveProtocol, t: f64) -> Result<Scenario> {
    let s = scenario.with(drive.target, evaluate_drive(drive, t)?)?;
    s.validate()?;
    Ok(s)
}

/// Centered derivative of `f` on a uniform grid of spacing `h`, with
/// three-point one-sided differences at the two ends.
fn differentiate(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|k| {
            if k == 0 {
                (4.0 * (f[1] - f[0]) - (f[2] - f[0])) / (2.0 * h)
            } else if k == n - 1 {
                (4.0 * (f[k] - f[k - 1]) - (f[k] - f[k - 2])) / (2.0 * h)
            } else {
                (f[k + 1] - f[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Derivatives at the coarse samples (even fine indices), from spacing `h`
/// (every other fine point) and `h/2` (adjacent fine points).
fn two_step_derivative(fine: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let coarse: Vec<f64> = fine.iter().step_by(2).copied().collect();
    let d_h = differentiate(&coarse, h);
    let d_half_all = differentiate(fine, 0.5 * h);
    let d_half = d_half_all.iter().step_by(2).copied().collect();
    (d_h, d_half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotiveForceReport {
    pub branch: Branch,
    pub drive: DriveProtocol,
    /// Spacing of the sample grid.
    pub spacing: f64,
    pub t: Vec<f64>,
    /// `−d/dt[Φ_AB + ∮A_eff·dl]` at spacing `h/2`.
    pub eps_force: Vec<f64>,
    /// `−dΦ_T/dt` at spacing `h/2`.
    pub eps_flux: Vec<f64>,
    /// Same two series at spacing `h`, for the step-halving check.
    pub eps_force_coarse: Vec<f64>,
    pub eps_flux_coarse: Vec<f64>,
    /// `(4 ε_{h/2} − ε_h)/3`.
    pub eps_flux_richardson: Vec<f64>,
    /// Ledger parts: `−dΦ_dyn/dt`, `−dΦ_geo/dt`, `−dΦ_AB/dt`.
    pub eps_dynamical: Vec<f64>,
    pub eps_geo: Vec<f64>,
    pub eps_ab: Vec<f64>,
    pub ledger: Vec<FluxLedger>,
    /// One-sided differences were used at this sample.
    pub boundary: Vec<bool>,
    pub max_discrepancy: f64,
    pub max_flux: f64,
    /// Some sample's eigenstate did not close after one revolution.
    pub non_cyclic: bool,
    /// Some sample sat on the limiting branch of the cone relation.
    pub limiting: bool,
}

impl MotiveForceReport {
    /// `max|ε_force − ε_flux| / max|ε_flux|` (absolute when the flux series vanishes).
    pub fn relative_discrepancy(&self) -> f64 {
        if self.max_flux > 0.0 {
            self.max_discrepancy / self.max_flux
        } else {
            self.max_discrepancy
        }
    }

    /// `max|ε_dyn + ε_geo + ε_ab − ε_flux|`, relative to `max|ε_flux|`.
    pub fn additivity_error(&self) -> f64 {
        let worst = (0..self.t.len())
            .map(|k| (self.eps_dynamical[k] + self.eps_geo[k] + self.eps_ab[k] - self.eps_flux[k]).abs())
            .fold(0.0, f64::max);
        if self.max_flux > 0.0 {
            worst / self.max_flux
        } else {
            worst
        }
    }

    pub fn flagged(&self) -> bool {
        self.non_cyclic || self.limiting
    }

    /// Errors of `ε_flux` at spacing `h` and `h/2` against the exact
    /// `−dΦ_AB/dt` of the drive, skipping samples whose stencil touches an
    /// interior knot. Only meaningful when the drive targets the AB flux.
    pub fn ordinary_faraday_errors(&self) -> Result<(f64, f64)> {
        if self.drive.target != Param::AbFlux {
            return Err(Error::InvalidDrive("drive does not target ab_flux".into()));
        }
        let (mut err_h, mut err_half) = (0.0f64, 0.0f64);
        for (k, &t) in self.t.iter().enumerate() {
            if self.drive.distance_to_interior_knot(t) <= 2.0 * self.spacing {
                continue;
            }
            let exact = -self.drive.slope(t)?;
            err_h = err_h.max((self.eps_flux_coarse[k] - exact).abs());
            err_half = err_half.max((self.eps_flux[k] - exact).abs());
        }
        Ok((err_h, err_half))
    }

    /// CSV `t,eps_force,eps_flux,phi_ab,phi_dyn,phi_geo` followed by a `#` summary line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,eps_force,eps_flux,phi_ab,phi_dyn,phi_geo")?;
        for k in 0..self.t.len() {
            let l = &self.ledger[k];
            writeln!(
                out,
                "{},{},{},{},{},{}",
                num(self.t[k]),
                num(self.eps_force[k]),
                num(self.eps_flux[k]),
                num(l.phi_ab),
                num(l.phi_dyn_ac),
                num(l.phi_geo)
            )?;
        }
        writeln!(
            out,
            "# max_abs_discrepancy={} max_abs_eps_flux={} relative={} non_cyclic={} limiting={}",
            num(self.max_discrepancy),
            num(self.max_flux),
            num(self.relative_discrepancy()),
            self.non_cyclic,
            self.limiting
        )
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Runs both motive-force pipelines over `samples` evenly spaced times of the
/// drive. Ledgers are evaluated on a grid twice as fine (concurrently, one
/// propagation of `steps` steps per point) so each sample gets derivatives at
/// two spacings.
pub fn faraday_compare(
    scenario: &Scenario,
    branch: Branch,
    drive: &DriveProtocol,
    samples: usize,
    steps: usize,
) -> Result<MotiveForceReport> {
    if samples < 3 {
        return Err(Error::Domain(format!("need at least 3 samples (got {samples})")));
    }
    scenario.get(drive.target)?;
    let duration = drive.duration();
    let h = duration / (samples - 1) as f64;
    let fine_len = 2 * samples - 1;
    let fine_t: Vec<f64> = (0..fine_len)
        .map(|j| if j == fine_len - 1 { duration } else { 0.5 * h * j as f64 })
        .collect();

    let mut ledger = fine_t
        .par_iter()
        .map(|&t| flux_ledger(&driven_scenario(scenario, drive, t)?, branch, steps, t))
        .collect::<Result<Vec<_>>>()?;
    // keep Φ_geo on one sheet so a 2π relabelling never shows up as a force
    for j in 1..ledger.len() {
        ledger[j].phi_geo = nearest_branch(ledger[j].phi_geo, ledger[j - 1].phi_geo);
    }

    let series = |f: &dyn Fn(&FluxLedger) -> f64| -> Vec<f64> { ledger.iter().map(f).collect() };
    let neg = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| -x).collect() };

    let (force_h, force_half) = two_step_derivative(&series(&|l| l.force_flux), h);
    let (flux_h, flux_half) = two_step_derivative(&series(&|l| l.total()), h);
    let (_, dyn_half) = two_step_derivative(&series(&|l| l.phi_dyn_ac), h);
    let (_, geo_half) = two_step_derivative(&series(&|l| l.phi_geo), h);
    let (_, ab_half) = two_step_derivative(&series(&|l| l.phi_ab), h);

    let eps_force = neg(force_half);
    let eps_flux = neg(flux_half);
    let eps_force_coarse = neg(force_h);
    let eps_flux_coarse = neg(flux_h);
    let eps_flux_richardson = eps_flux
        .iter()
        .zip(&eps_flux_coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect();

    let max_discrepancy = eps_force
        .iter()
        .zip(&eps_flux)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let max_flux = eps_flux.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let coarse_ledger: Vec<FluxLedger> = ledger.iter().step_by(2).copied().collect();
    let non_cyclic = ledger.iter().any(|l| !l.cyclic);
    let limiting = ledger.iter().any(|l| l.limiting);

    Ok(MotiveForceReport {
        branch,
        drive: drive.clone(),
        spacing: h,
        t: coarse_ledger.iter().map(|l| l.t).collect(),
        eps_force,
        eps_flux,
        eps_force_coarse,
        eps_flux_coarse,
        eps_flux_richardson,
        eps_dynamical: neg(dyn_half),
        eps_geo: neg(geo_half),
        eps_ab: neg(ab_half),
        boundary: (0..samples).map(|k| k == 0 || k == samples - 1).collect(),
        ledger: coarse_ledger,
        max_discrepancy,
        max_flux,
        non_cyclic,
        limiting,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicalForce {
    pub value: f64,
    /// A one-sided difference was needed at a drive boundary.
    pub one_sided: bool,
}

/// `−dΦ_dyn/dt` of the closed-form spin–orbit dynamical phase at time `t`.
/// This is the motive force of the operator-level spin Lorentz force, which
/// sees only the dynamical phase.
pub fn dynamical_motive_force(scenario: &Scenario, branch: Branch, drive: &DriveProtocol, t: f64) -> Result<DynamicalForce> {
    let duration = drive.duration();
    if !(0.0..=duration).contains(&t) {
        return Err(Error::OutOfRange { t, duration });
    }
    let phase = |t: f64| -> Result<f64> {
        let sol = InvariantSolution::for_scenario(&driven_scenario(scenario, drive, t)?, branch)?;
        Ok(analytic_phases(&sol).dynamical_ac)
    };
    let d = 1e-4 * duration;
    let (value, one_sided) = if t - d < 0.0 {
        {
        let (f0, f1, f2) = (phase(t)?, phase(t + d)?, phase(t + 2.0 * d)?);
        ((4.0 * (f1 - f0) - (f2 - f0)) / (2.0 * d), true)
    }
    } else if t + d > duration {
        {
        let (f0, f1, f2) = (phase(t)?, phase(t - d)?, phase(t - 2.0 * d)?);
        ((4.0 * (f0 - f1) - (f0 - f2)) / (2.0 * d), true)
    }
    } else {
        ((phase(t + d)? - phase(t - d)?) / (2.0 * d), false)
    };
    Ok(DynamicalForce {
        value: -value,
        one_sided,
    })
}

/// Laboratory-scale inputs for Stern's geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SternSiInput {
    /// Axial field, tesla.
    pub b_z: f64,
    /// Azimuthal field at the start and end of a linear ramp, tesla.
    pub b_phi_from: f64,
    pub b_phi_to: f64,
    /// Ramp duration, seconds.
    pub ramp_time: f64,
    /// Orbital energy quantum `ħω`, joules.
    pub hbar_omega: f64,
    /// Ring radius, metres. Enters only through `ω`, which is given directly.
    pub radius: f64,
}

impl SternSiInput {
    /// `B_z = 1 T`, `ħω = 10⁻²³ J`, `B_φ` ramped from 0 to 1 T over 10 ns.
    pub fn reference() -> Self {
        Self {
            b_z: 1.0,
            b_phi_from: 0.0,
            b_phi_to: 1.0,
            ramp_time: 10e-9,
            hbar_omega: 1e-23,
            radius: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SternSiEstimate {
    /// `max|ε|` over the ramp, volts.
    pub amplitude_volts: f64,
    pub hbar_omega_joule: f64,
    pub mu_bz_joule: f64,
    /// Time unit `1/ω`, seconds.
    pub time_unit: f64,
    pub volts_per_internal: f64,
    pub report: MotiveForceReport,
}

/// Motive-force amplitude in volts for a linear `B_φ` ramp. Runs the internal
/// comparator with time measured in `1/ω` and energies in `ħω`.
pub fn stern_si_estimate(input: &SternSiInput, units: &UnitSystem, branch: Branch) -> Result<SternSiEstimate> {
    if units.mode != UnitMode::Si {
        return Err(Error::Units("the volt estimate needs SI units".into()));
    }
    let finite = [input.b_z, input.b_phi_from, input.b_phi_to, input.ramp_time, input.hbar_omega, input.radius];
    if finite.iter().any(|v| !v.is_finite()) || input.hbar_omega <= 0.0 || input.ramp_time <= 0.0 {
        return Err(Error::Domain("SI inputs must be finite with ħω > 0 and ramp time > 0".into()));
    }
    let mu = units.mu();
    let tau = units.hbar / input.hbar_omega;
    let energy = |b: f64| mu * b / input.hbar_omega;
    let mut sc = SternScenario::new(energy(input.b_phi_from), energy(input.b_z), 1.0);
    sc.radius = 1.0;
    let drive = DriveProtocol::linear(Param::BPhi, sc.b_phi, energy(input.b_phi_to), input.ramp_time / tau)?;
    let report = faraday_compare(&Scenario::Stern(sc), branch, &drive, 33, 1024)?;
    let volts_per_internal = units.volts_per_internal(tau)?;
    Ok(SternSiEstimate {
        amplitude_volts: report.max_flux * volts_per_internal,
        hbar_omega_joule: input.hbar_omega,
        mu_bz_joule: mu * input.b_z,
        time_unit: tau,
        volts_per_internal,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ACRingScenario, CombinedScenario};
    use crate::invariant::{analytic_phases_ac, ring_solution, solve_beta, stern_cone};

    fn ac(alpha: f64, chi: f64) -> Scenario {
        Scenario::AcRing(ACRingScenario::new(alpha, chi))
    }

    #[test]
    fn free_spin_stays_put() {
        let traj = precess([0.1, 0.2, 0.3], &ac(0.0, 0.4), 0.0, 5.0, 100).unwrap();
        assert!(traj.samples.iter().all(|p| p.spin == [0.1, 0.2, 0.3]));
    }

    #[test]
    fn axial_field_precesses_at_cyclotron_rate() {
        let bz = 0.4;
        let sc = Scenario::Stern(SternScenario::new(0.0, bz, 1.0));
        let traj = precess([0.5, 0.0, 0.0], &sc, 0.0, 3.0, 300).unwrap();
        for p in &traj.samples {
            let az = p.spin[1].atan2(p.spin[0]);
            let expect = -2.0 * bz * p.t;
            let d = (az - expect).rem_euclid(2.0 * PI);
            assert!(d.min(2.0 * PI - d) < 1e-10, "t = {}", p.t);
        }
    }

    #[test]
    fn synchronous_cone_is_stationary() {
        let (alpha, chi, omega) = (0.3, 0.5, 1.7);
        let beta = solve_beta(alpha, chi).unwrap().angle;
        let s0 = [0.5 * beta.sin(), 0.0, 0.5 * beta.cos()];
        let traj = precess(s0, &ac(alpha, chi), omega, 2.0 * PI / omega, 2000).unwrap();
        let drift = traj.samples.iter().map(|p| (p.spin[2] - s0[2]).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-6 * 0.5);
        // the lab-frame spin has followed the particle once around
        let end = traj.last().spin;
        assert!((end[0] - s0[0]).abs() < 1e-10 && end[1].abs() < 1e-10);

        // Stern's geometry: same statement for chi_cone
        let st = SternScenario::new(0.6, 0.8, 0.45);
        let c = stern_cone(&st).unwrap().angle;
        let s0 = [0.0, 0.5 * c.sin(), 0.5 * c.cos()];
        let traj = precess(s0, &Scenario::Stern(st), st.omega, st.period(), 2000).unwrap();
        assert!(traj.samples.iter().all(|p| (p.spin[2] - s0[2]).abs() <= 1e-6 * 0.5));
    }

    #[test]
    fn off_cone_spin_nutates_but_keeps_length() {
        let traj = precess([0.5, 0.0, 0.0], &ac(0.8, 1.1), 1.3, 20.0, 5000).unwrap();
        assert!(traj.length_drift() <= 1e-12);
        let zs: Vec<f64> = traj.samples.iter().map(|p| p.spin[2]).collect();
        let spread = zs.iter().cloned().fold(f64::MIN, f64::max) - zs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 1e-2);
    }

    #[test]
    fn effective_potential_examples() {
        // E = 0 and s ∥ r̂
        let sc = ac(0.0, 0.3);
        let phi: f64 = 0.9;
        let s = [0.5 * phi.cos(), 0.5 * phi.sin(), 0.0];
        assert!(norm(effective_potential(s, phi, &sc)) < 1e-16);

        // s = ẑ/2: tangential component is constant around the ring
        let vals: Vec<f64> = (0..16)
            .map(|k| {
                let phi = k as f64 * 0.4;
                let a = effective_potential([0.0, 0.0, 0.5], phi, &sc);
                dot(a, [-phi.sin(), phi.cos(), 0.0])
            })
            .collect();
        assert!(vals.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn loop_integral_of_constant_tangential_field() {
        assert_eq!(line_integral(|_| [0.0; 3], 1.0, 64), 0.0);
        let k = 0.7;
        let val = line_integral(|phi| [-k * phi.sin(), k * phi.cos(), 0.0], 2.5, 64);
        assert!((val - 2.0 * PI * 2.5 * k).abs() < 1e-12);
    }

    #[test]
    fn rotation_term_on_cone_is_proportional_to_cos_beta() {
        let sc = ACRingScenario::new(0.3, 0.5);
        let loop_of = |beta: f64| {
            let sol = InvariantSolution::ring_with_beta(sc, beta, Branch::Plus);
            let spin = synchronous_cone(&sol);
            line_integral(|phi| rotation_term(spin(phi), phi, 1.0), 1.0, 128)
        };
        for beta in [0.2, 0.9, 1.4, 2.5] {
            assert!((loop_of(beta) - PI * f64::cos(beta)).abs() < 1e-13);
        }
        // doubling cos β doubles the integral
        let (b1, b2) = (1.2f64, (2.0 * 1.2f64.cos()).acos());
        assert!((loop_of(b2) - 2.0 * loop_of(b1)).abs() < 1e-12);
    }

    #[test]
    fn moment_term_on_cone_gives_dynamical_phase() {
        for (alpha, chi) in [(0.3, 0.5), (0.9, 1.4), (0.1, 2.6)] {
            let sc = ac(alpha, chi);
            for b in [Branch::Plus, Branch::Minus] {
                let sol = ring_solution(alpha, chi, b).unwrap();
                let spin = synchronous_cone(&sol);
                let moment = line_integral(
                    |phi| cross(spin(phi).map(|c| 2.0 * c), sc.e_field(phi)),
                    1.0,
                    128,
                );
                let a = analytic_phases_ac(alpha, chi, b).unwrap();
                assert!((moment - a.dynamical).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ledger_is_additive_and_force_matches_geometry() {
        let sc = Scenario::Combined(CombinedScenario {
            alpha: 0.2,
            chi_tilt: 0.7,
            ab_flux: 0.4,
            b_phi: 0.3,
            b_z: 0.1,
            omega: 0.9,
            radius: 1.0,
        });
        let l = flux_ledger(&sc, Branch::Plus, 4096, 0.0).unwrap();
        assert_eq!(l.total(), l.phi_ab + l.phi_dyn_ac + l.phi_geo);
        assert!(l.cyclic);
        // force flux exceeds the phase ledger by the constant π
        assert!((l.force_flux - l.total() - PI).abs() < 1e-6, "{l:?}");
    }

    #[test]
    fn static_drive_gives_no_force() {
        let sc = ac(0.3, 0.5);
        let drive = DriveProtocol::new(Param::Alpha, vec![(0.0, 0.3), (2.0, 0.3)]).unwrap();
        let r = faraday_compare(&sc, Branch::Plus, &drive, 9, 256).unwrap();
        assert!(r.eps_flux.iter().chain(&r.eps_force).all(|x| *x == 0.0));
        assert_eq!(dynamical_motive_force(&sc, Branch::Plus, &drive, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn stern_ramp_pipelines_agree() {
        let sc = Scenario::Stern(SternScenario::new(0.0, 0.8, 0.45));
        let drive = DriveProtocol::linear(Param::BPhi, 0.0, 1.0, 40.0).unwrap();
        let r = faraday_compare(&sc, Branch::Plus, &drive, 17, 2048).unwrap();
        assert!(r.max_flux > 0.0);
        assert!(r.relative_discrepancy() <= 1e-4, "{}", r.relative_discrepancy());
        assert!(r.additivity_error() <= 1e-8);
        assert!(!r.flagged());
        assert!(r.boundary[0] && r.boundary[16] && !r.boundary[8]);
    }

    #[test]
    fn ab_only_ramp_is_ordinary_faraday() {
        let sc = ac(0.0, 0.5);
        let drive = DriveProtocol::new(Param::AbFlux, vec![(0.0, 0.0), (1.0, 2.0), (3.0, -1.0)]).unwrap();
        let r = faraday_compare(&sc, Branch::Plus, &drive, 25, 64).unwrap();
        let (eh, eh2) = r.ordinary_faraday_errors().unwrap();
        assert!(eh2 <= eh / 3.5 || eh2 <= 1e-10, "{eh} {eh2}");
        assert!(r.max_discrepancy <= 1e-10);
    }

    #[test]
    fn dynamical_force_on_alpha_ramp() {
        let sc = ac(0.1, 0.5);
        let drive = DriveProtocol::linear(Param::Alpha, 0.1, 0.6, 5.0).unwrap();
        // dense differencing oracle of 4πα cos(χ − β(α))
        let phase = |t: f64| {
            let a = 0.1 + 0.1 * t;
            analytic_phases_ac(a, 0.5, Branch::Plus).unwrap().dynamical
        };
        for t in [0.5, 2.5, 4.0] {
            let eps = dynamical_motive_force(&sc, Branch::Plus, &drive, t).unwrap();
            let d = 1e-6;
            let oracle = -(phase(t + d) - phase(t - d)) / (2.0 * d);
            assert!(!eps.one_sided);
            assert!((eps.value - oracle).abs() < 1e-6 * oracle.abs());
        }
        assert!(dynamical_motive_force(&sc, Branch::Plus, &drive, 0.0).unwrap().one_sided);
        assert!(dynamical_motive_force(&sc, Branch::Plus, &drive, 6.0).is_err());
    }

    #[test]
    fn si_estimate_scale() {
        let units = UnitSystem::si();
        let est = stern_si_estimate(&SternSiInput::reference(), &units, Branch::Plus).unwrap();
        assert!((est.mu_bz_joule / 9.27e-24 - 1.0).abs() < 5e-3);
        let decades = (est.amplitude_volts / 1e-7).log10().abs();
        assert!(decades <= 1.0, "{} V", est.amplitude_volts);

        let flat = SternSiInput { b_phi_to: 0.0, ..SternSiInput::reference() };
        assert_eq!(stern_si_estimate(&flat, &units, Branch::Plus).unwrap().amplitude_volts, 0.0);
        assert!(matches!(
            stern_si_estimate(&SternSiInput::reference(), &UnitSystem::internal(), Branch::Plus),
            Err(Error::Units(_))
        ));
    }
}
