//! Field configurations on the ring and their SU(2) spin gauge potentials.
//!
//! Internal units fix `ħ = c = e = a = μ = 1`, so the electron mass is 1/2,
//! the flux quantum is `2π`, magnetic fields are Zeeman energies `μB`, and the
//! ring's electric field is `E = 2α` (from `α = μEa/(2ħc)`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinor::HermitianObservable;

/// CODATA 2018 values, SI.
pub mod si {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const C: f64 = 299_792_458.0;
    pub const E: f64 = 1.602_176_634e-19;
    pub const M_E: f64 = 9.109_383_701_5e-31;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    Internal,
    Si,
}

impl fmt::Display for UnitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitMode::Internal => f.write_str("internal"),
            UnitMode::Si => f.write_str("si"),
        }
    }
}

impl FromStr for UnitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "internal" => Ok(UnitMode::Internal),
            "si" | "SI" => Ok(UnitMode::Si),
            other => Err(Error::Units(format!("unknown unit system `{other}`"))),
        }
    }
}

/// Physical constants of one unit system.
///
/// `mu` and `flux_quantum` are Gaussian expressions `eħ/(2mc)` and `hc/e`;
/// in SI the factor of `c` drops out of both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub mode: UnitMode,
    pub hbar: f64,
    pub c: f64,
    pub e: f64,
    pub m_e: f64,
}

impl UnitSystem {
    pub const fn internal() -> Self {
        Self {
            mode: UnitMode::Internal,
            hbar: 1.0,
            c: 1.0,
            e: 1.0,
            m_e: 0.5,
        }
    }

    pub const fn si() -> Self {
        Self {
            mode: UnitMode::Si,
            hbar: si::HBAR,
            c: si::C,
            e: si::E,
            m_e: si::M_E,
        }
    }

    pub fn from_mode(mode: UnitMode) -> Self {
        match mode {
            UnitMode::Internal => Self::internal(),
            UnitMode::Si => Self::si(),
        }
    }

    fn gauss_c(&self) -> f64 {
        match self.mode {
            UnitMode::Internal => self.c,
            UnitMode::Si => 1.0,
        }
    }

    /// Electron magnetic moment `eħ/(2mc)`; J/T in SI.
    pub fn mu(&self) -> f64 {
        self.e * self.hbar / (2.0 * self.m_e * self.gauss_c())
    }

    /// Flux quantum `hc/e`; Wb in SI.
    pub fn flux_quantum(&self) -> f64 {
        2.0 * PI * self.hbar * self.gauss_c() / self.e
    }

    /// Volts per internal unit of motive force when one internal time unit is `tau` seconds.
    pub fn volts_per_internal(&self, tau: f64) -> Result<f64> {
        match self.mode {
            UnitMode::Si => Ok(self.hbar / (self.e * tau)),
            UnitMode::Internal => Err(Error::Units(
                "volt conversion requires the SI unit system".into(),
            )),
        }
    }
}

/// Ring in a cylindrically symmetric electric field `E(cosχ r̂ − sinχ ẑ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ACRingScenario {
    /// Dimensionless coupling `μEa/(2ħc)`.
    pub alpha: f64,
    /// Tilt of the field out of the ring plane.
    pub chi_tilt: f64,
    pub radius: f64,
    /// Aharonov–Bohm phase per revolution (radians).
    pub ab_flux: f64,
}

impl ACRingScenario {
    pub fn new(alpha: f64, chi_tilt: f64) -> Self {
        Self {
            alpha,
            chi_tilt,
            radius: 1.0,
            ab_flux: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            bad.push(format!("alpha must be finite and >= 0 (got {})", self.alpha));
        }
        if !(self.chi_tilt.is_finite() && (0.0..=PI).contains(&self.chi_tilt)) {
            bad.push(format!("chi_tilt must lie in [0, π] (got {})", self.chi_tilt));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            bad.push(format!("radius must be > 0 (got {})", self.radius));
        }
        if !self.ab_flux.is_finite() {
            bad.push(format!("ab_flux must be finite (got {})", self.ab_flux));
        }
        join_violations(bad)
    }

    /// Field magnitude in internal units.
    pub fn field_strength(&self) -> f64 {
        2.0 * self.alpha / self.radius
    }

    /// Unit direction of `b_φ` at ring angle `phi`.
    pub fn b_direction(&self, phi: f64) -> [f64; 3] {
        let (sp, cp) = phi.sin_cos();
        let (sc, cc) = self.chi_tilt.sin_cos();
        [cp * sc, sp * sc, cc]
    }

    /// Laboratory electric field vector at ring angle `phi`.
    pub fn e_field(&self, phi: f64) -> [f64; 3] {
        let e = self.field_strength();
        let (sp, cp) = phi.sin_cos();
        let (sc, cc) = self.chi_tilt.sin_cos();
        [e * cc * cp, e * cc * sp, -e * sc]
    }
}

/// Stern's geometry: `B = (−B_φ sinφ, B_φ cosφ, B_z)` seen by an electron
/// orbiting at angular velocity `omega`. Field values are Zeeman energies `μB`
/// in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SternScenario {
    pub b_phi: f64,
    pub b_z: f64,
    pub omega: f64,
    pub radius: f64,
    /// Orbital quantum number of the factored-out ring state.
    pub n: i64,
}

impl SternScenario {
    pub fn new(b_phi: f64, b_z: f64, omega: f64) -> Self {
        Self {
            b_phi,
            b_z,
            omega,
            radius: 1.0,
            n: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [("b_phi", self.b_phi), ("b_z", self.b_z)] {
            if !v.is_finite() {
                bad.push(format!("{name} must be finite (got {v})"));
            }
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            bad.push(format!("omega must be finite and > 0 (got {})", self.omega));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            bad.push(format!("radius must be > 0 (got {})", self.radius));
        }
        join_violations(bad)
    }

    /// Orbital period `2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn b_field(&self, phi: f64) -> [f64; 3] {
        let (sp, cp) = phi.sin_cos();
        [-self.b_phi * sp, self.b_phi * cp, self.b_z]
    }
}

/// AC ring and Stern fields acting together, plus an AB flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedScenario {
    pub alpha: f64,
    pub chi_tilt: f64,
    pub ab_flux: f64,
    pub b_phi: f64,
    pub b_z: f64,
    pub omega: f64,
    pub radius: f64,
}

impl CombinedScenario {
    pub fn ring(&self) -> ACRingScenario {
        ACRingScenario {
            alpha: self.alpha,
            chi_tilt: self.chi_tilt,
            radius: self.radius,
            ab_flux: self.ab_flux,
        }
    }

    pub fn zeeman(&self) -> SternScenario {
        SternScenario {
            b_phi: self.b_phi,
            b_z: self.b_z,
            omega: self.omega,
            radius: self.radius,
            n: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if let Err(Error::InvalidScenario(m)) = self.ring().validate() {
            bad.push(m);
        }
        if let Err(Error::InvalidScenario(m)) = self.zeeman().validate() {
            bad.push(m);
        }
        join_violations(bad)
    }
}

fn join_violations(bad: Vec<String>) -> Result<()> {
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidScenario(bad.join("; ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    AcRing,
    Stern,
    Combined,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioKind::AcRing => "ac_ring",
            ScenarioKind::Stern => "stern",
            ScenarioKind::Combined => "combined",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ac_ring" => Ok(ScenarioKind::AcRing),
            "stern" => Ok(ScenarioKind::Stern),
            "combined" => Ok(ScenarioKind::Combined),
            other => Err(Error::InvalidScenario(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// Scalar scenario parameters that drives and sweeps can address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Alpha,
    ChiTilt,
    AbFlux,
    BPhi,
    BZ,
    Omega,
    Radius,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::Alpha,
        Param::ChiTilt,
        Param::AbFlux,
        Param::BPhi,
        Param::BZ,
        Param::Omega,
        Param::Radius,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::ChiTilt => "chi_tilt",
            Param::AbFlux => "ab_flux",
            Param::BPhi => "b_phi",
            Param::BZ => "b_z",
            Param::Omega => "omega",
            Param::Radius => "radius",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    AcRing(ACRingScenario),
    Stern(SternScenario),
    Combined(CombinedScenario),
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::AcRing(_) => ScenarioKind::AcRing,
            Scenario::Stern(_) => ScenarioKind::Stern,
            Scenario::Combined(_) => ScenarioKind::Combined,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::AcRing(s) => s.validate(),
            Scenario::Stern(s) => s.validate(),
            Scenario::Combined(s) => s.validate(),
        }
    }

    pub fn ab_flux(&self) -> f64 {
        match self {
            Scenario::AcRing(s) => s.ab_flux,
            Scenario::Stern(_) => 0.0,
            Scenario::Combined(s) => s.ab_flux,
        }
    }

    pub fn get(&self, p: Param) -> Result<f64> {
        let missing = || Error::UnknownParameter(format!("{p} (not part of a {} scenario)", self.kind()));
        Ok(match (self, p) {
            (Scenario::AcRing(s), Param::Alpha) => s.alpha,
            (Scenario::AcRing(s), Param::ChiTilt) => s.chi_tilt,
            (Scenario::AcRing(s), Param::AbFlux) => s.ab_flux,
            (Scenario::AcRing(s), Param::Radius) => s.radius,
            (Scenario::Stern(s), Param::BPhi) => s.b_phi,
            (Scenario::Stern(s), Param::BZ) => s.b_z,
            (Scenario::Stern(s), Param::Omega) => s.omega,
            (Scenario::Stern(s), Param::Radius) => s.radius,
            (Scenario::Combined(s), Param::Alpha) => s.alpha,
            (Scenario::Combined(s), Param::ChiTilt) => s.chi_tilt,
            (Scenario::Combined(s), Param::AbFlux) => s.ab_flux,
            (Scenario::Combined(s), Param::BPhi) => s.b_phi,
            (Scenario::Combined(s), Param::BZ) => s.b_z,
            (Scenario::Combined(s), Param::Omega) => s.omega,
            (Scenario::Combined(s), Param::Radius) => s.radius,
            _ => return Err(missing()),
        })
    }

    /// `dφ/dλ` for the natural evolution parameter λ (φ itself on the AC ring, t otherwise).
    pub fn angular_rate(&self) -> f64 {
        match self {
            Scenario::AcRing(_) => 1.0,
            Scenario::Stern(s) => s.omega,
            Scenario::Combined(s) => s.omega,
        }
    }

    /// Span of the evolution parameter covering one revolution.
    pub fn revolution(&self) -> f64 {
        2.0 * PI / self.angular_rate()
    }

    pub fn ring_angle(&self, param: f64) -> f64 {
        self.angular_rate() * param
    }

    /// `Ĥ/ħ` in the natural evolution parameter. On the AC ring this is
    /// `−(μa/ħc) b_φ`; in Stern's geometry `−μB·σ/ħ`; the combined case adds
    /// the ring term scaled by `ω`.
    pub fn generator(&self, param: f64) -> HermitianObservable {
        let phi = self.ring_angle(param);
        match self {
            Scenario::AcRing(s) => b_phi(s, phi).scaled(-s.radius),
            Scenario::Stern(s) => b0_stern(s, phi),
            Scenario::Combined(s) => {
                let ring = b_phi(&s.ring(), phi).scaled(-s.radius * s.omega);
                ring.add(&b0_stern(&s.zeeman(), phi))
            }
        }
    }

    /// Spin–orbit (AC) part of the generator only; zero in Stern's geometry.
    pub fn ac_generator(&self, param: f64) -> HermitianObservable {
        let phi = self.ring_angle(param);
        match self {
            Scenario::AcRing(s) => b_phi(s, phi).scaled(-s.radius),
            Scenario::Stern(_) => HermitianObservable::zero(),
            Scenario::Combined(s) => b_phi(&s.ring(), phi).scaled(-s.radius * s.omega),
        }
    }

    /// Laboratory electric field at ring angle `phi` (zero in Stern's geometry).
    pub fn e_field(&self, phi: f64) -> [f64; 3] {
        match self {
            Scenario::AcRing(s) => s.e_field(phi),
            Scenario::Stern(_) => [0.0; 3],
            Scenario::Combined(s) => s.ring().e_field(phi),
        }
    }

    /// Laboratory magnetic field (as `μB`) at ring angle `phi`.
    pub fn b_field(&self, phi: f64) -> [f64; 3] {
        match self {
            Scenario::AcRing(_) => [0.0; 3],
            Scenario::Stern(s) => s.b_field(phi),
            Scenario::Combined(s) => s.zeeman().b_field(phi),
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Scenario::AcRing(s) => s.radius,
            Scenario::Stern(s) => s.radius,
            Scenario::Combined(s) => s.radius,
        }
    }

    /// Copy with one parameter replaced. Does not validate.
    pub fn with(&self, p: Param, v: f64) -> Result<Scenario> {
        self.get(p)?;
        let mut out = *self;
        match (&mut out, p) {
            (Scenario::AcRing(s), Param::Alpha) => s.alpha = v,
            (Scenario::AcRing(s), Param::ChiTilt) => s.chi_tilt = v,
            (Scenario::AcRing(s), Param::AbFlux) => s.ab_flux = v,
            (Scenario::AcRing(s), Param::Radius) => s.radius = v,
            (Scenario::Stern(s), Param::BPhi) => s.b_phi = v,
            (Scenario::Stern(s), Param::BZ) => s.b_z = v,
            (Scenario::Stern(s), Param::Omega) => s.omega = v,
            (Scenario::Stern(s), Param::Radius) => s.radius = v,
            (Scenario::Combined(s), Param::Alpha) => s.alpha = v,
            (Scenario::Combined(s), Param::ChiTilt) => s.chi_tilt = v,
            (Scenario::Combined(s), Param::AbFlux) => s.ab_flux = v,
            (Scenario::Combined(s), Param::BPhi) => s.b_phi = v,
            (Scenario::Combined(s), Param::BZ) => s.b_z = v,
            (Scenario::Combined(s), Param::Omega) => s.omega = v,
            (Scenario::Combined(s), Param::Radius) => s.radius = v,
            _ => unreachable!("checked by get"),
        }
        Ok(out)
    }
}

/// SU(2) vector potential component `b_φ` at ring angle `phi`:
/// `E(cosφ sinχ σ₁ + sinφ sinχ σ₂ + cosχ σ₃)`.
pub fn b_phi(scenario: &ACRingScenario, phi: f64) -> HermitianObservable {
    let e = scenario.field_strength();
    HermitianObservable::from_vector(scenario.b_direction(phi).map(|c| e * c))
}

/// SU(2) scalar potential `b₀ = −σ·B` in Stern's geometry, as Pauli coefficients.
/// The Zeeman energy is `μ b₀`; with `μ = 1` internally this is the generator itself.
pub fn b0_stern(scenario: &SternScenario, phi: f64) -> HermitianObservable {
    HermitianObservable::from_vector(scenario.b_field(phi).map(|c| -c))
}

/// `b0_stern` along the orbit `φ = ωt`.
pub fn b0_along_orbit(scenario: &SternScenario, t: f64) -> HermitianObservable {
    b0_stern(scenario, scenario.omega * t)
}

/// Ring energy `(1/(2ma²))(n − eB_zπa³/(2c))²` evaluated as written.
///
/// Only defined in internal units: the bracket is not dimensionless once `ħ`
/// is restored, so SI mode is rejected.
pub fn orbital_energy(scenario: &SternScenario, units: &UnitSystem) -> Result<f64> {
    if units.mode != UnitMode::Internal {
        return Err(Error::Units(
            "orbital_energy is only defined in internal units".into(),
        ));
    }
    let a = scenario.radius;
    let shift = units.e * scenario.b_z * PI * a.powi(3) / (2.0 * units.c);
    let bracket = scenario.n as f64 - shift;
    Ok(bracket * bracket / (2.0 * units.m_e * a * a))
}

/// Piecewise-linear schedule for one scenario parameter. Knot times start at 0
/// and increase strictly; the last knot time is the duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveProtocol {
    pub target: Param,
    knots: Vec<(f64, f64)>,
}

impl DriveProtocol {
    pub fn new(target: Param, knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidDrive("at least two knots are required".into()));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::InvalidDrive(format!(
                "first knot must be at t = 0 (got {})",
                knots[0].0
            )));
        }
        if let Some((t, v)) = knots.iter().find(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidDrive(format!("non-finite knot ({t}, {v})")));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDrive(format!(
                "knot times must increase strictly ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { target, knots })
    }

    /// Straight line from `from` at t = 0 to `to` at t = `duration`.
    pub fn linear(target: Param, from: f64, to: f64, duration: f64) -> Result<Self> {
        Self::new(target, vec![(0.0, from), (duration, to)])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn duration(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn is_static(&self) -> bool {
        self.knots.iter().all(|k| k.1 == self.knots[0].1)
    }

    /// Slope of the segment containing `t` (right segment at an interior knot).
    pub fn slope(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let i = self.segment(t);
        let (t0, v0) = self.knots[i];
        let (t1, v1) = self.knots[i + 1];
        Ok((v1 - v0) / (t1 - t0))
    }

    /// Distance from `t` to the nearest interior knot, or infinity if there is none.
    pub fn distance_to_interior_knot(&self, t: f64) -> f64 {
        self.knots[1..self.knots.len() - 1]
            .iter()
            .map(|k| (k.0 - t).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn check(&self, t: f64) -> Result<()> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(Error::OutOfRange { t, duration });
        }
        Ok(())
    }

    fn segment(&self, t: f64) -> usize {
        let idx = self.knots.partition_point(|k| k.0 <= t);
        idx.saturating_sub(1).min(self.knots.len() - 2)
    }
}

/// Piecewise-linear interpolation of the schedule; exact at knots.
pub fn evaluate_drive(p: &DriveProtocol, t: f64) -> Result<f64> {
    p.check(t)?;
    let i = p.segment(t);
    let (t0, v0) = p.knots[i];
    let (t1, v1) = p.knots[i + 1];
    if t == t0 {
        return Ok(v0);
    }
    if t == t1 {
        return Ok(v1);
    }
    let w = (t - t0) / (t1 - t0);
    Ok(v0 + w * (v1 - v0))
}
