//! File-producing runs and parameter sweeps.
//!
//! Every output is a pure function of the parsed configuration: no
//! timestamps, fixed column order, and sweep rows collected in order however
//! many worker threads evaluate them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{
    faraday_compare, line_integral, rotation_term, synchronous_cone, MotiveForceReport, LOOP_POINTS,
};
use crate::config::{Config, RunConfig, SweepConfig};
use crate::error::{Error, Result};
use crate::fields::{Param, Scenario, UnitMode, UnitSystem};
use crate::format::num;
use crate::invariant::{
    alt_stern_cone, analytic_phases, reference_forms_ac, stern_geometric_phase, AnalyticPhases, Branch,
    InvariantSolution,
};
use crate::propagator::{nearest_branch, phase_distance, principal, propagate, PhaseDecomposition, QuantumTrajectory};
use crate::spinor::bloch;

/// Agreement required between the propagated and closed-form phases.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

/// Alternative closed forms reported next to the computed values.
#[derive(Debug, Clone, Serialize)]
pub struct AlternativeForms {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamical_half_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometric_opposite_sign: Option<f64>,
    /// Cone angle from the alternative tangent relation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_cone_angle: Option<f64>,
    /// `π(1 ± cos χ)`, half the solid angle of the cone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone_half_solid_angle: Option<f64>,
    /// `∮ (c/ea) s×r̂ · dl` on the synchronous cone, evaluated numerically.
    pub rotation_loop: f64,
    /// `Φ₀ π cos β`, the closed-form value this loop is sometimes quoted with.
    pub rotation_loop_quoted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    /// Distance modulo 2π between numeric and closed-form geometric phases.
    pub geometric: f64,
    pub dynamical: f64,
    pub within_tolerance: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    pub scenario: Scenario,
    pub branch: Branch,
    pub steps: usize,
    pub cone_angle: f64,
    pub azimuth_offset: f64,
    pub limiting: bool,
    pub convention: &'static str,
    pub analytic: AnalyticPhases,
    pub numeric: PhaseDecomposition,
    pub discrepancy: Discrepancy,
    pub alternatives: AlternativeForms,
    pub norm_drift: f64,
    pub notes: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiSummary {
    pub amplitude_volts: f64,
    pub hbar_omega_joule: f64,
    pub mu_bz_joule: f64,
    pub time_unit_seconds: f64,
    pub volts_per_internal: f64,
}

/// Everything a run computes, before anything is written.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub phases: PhaseReport,
    pub trajectory: QuantumTrajectory,
    pub faraday: Option<MotiveForceReport>,
    pub si: Option<SiSummary>,
    pub warnings: Vec<String>,
}

const NOTES: [&str; 3] = [
    "dynamical = -integral of <H>; geometric = integral of <psi|i d|psi>; both over one revolution",
    "numeric.geometric is the 2pi branch nearest the Bloch-path solid angle; geometric_principal lies in (-pi, pi]",
    "alternatives lists other quoted forms for comparison; they are not used in any computation",
];

fn alternatives(sol: &InvariantSolution, analytic: &AnalyticPhases) -> Result<AlternativeForms> {
    let radius = sol.scenario.radius();
    let spin = synchronous_cone(sol);
    let rotation_loop = line_integral(|phi| rotation_term(spin(phi), phi, radius), radius, LOOP_POINTS);
    let mut alt = AlternativeForms {
        dynamical_half_coefficient: None,
        geometric_opposite_sign: None,
        alt_cone_angle: None,
        cone_half_solid_angle: None,
        rotation_loop,
        rotation_loop_quoted: 2.0 * PI * PI * sol.beta.cos(),
    };
    match sol.scenario {
        Scenario::AcRing(s) => {
            let r = reference_forms_ac(s.alpha, s.chi_tilt, sol.branch)?;
            alt.dynamical_half_coefficient = Some(r.dynamical_half_coefficient);
            alt.geometric_opposite_sign = Some(r.geometric_opposite_sign);
            alt.alt_cone_angle = Some(r.alt_cone_angle);
        }
        Scenario::Stern(s) => {
            alt.alt_cone_angle = Some(alt_stern_cone(&s)?.angle);
            alt.cone_half_solid_angle = Some(stern_geometric_phase(sol.beta, sol.branch));
            alt.geometric_opposite_sign = Some(-analytic.geometric);
        }
        Scenario::Combined(_) => {}
    }
    Ok(alt)
}

/// Closed-form and propagated phases for one scenario.
pub fn phase_report(scenario: &Scenario, branch: Branch, steps: usize) -> Result<(PhaseReport, QuantumTrajectory)> {
    scenario.validate()?;
    let sol = InvariantSolution::for_scenario(scenario, branch)?;
    let analytic = analytic_phases(&sol);
    let traj = propagate(scenario, sol.eigenspinor(0.0), steps, 0.0, scenario.revolution())?;
    let numeric = traj.decompose();
    let geometric = phase_distance(numeric.geometric, analytic.geometric);
    let dynamical = (numeric.dynamical - analytic.dynamical).abs();
    let report = PhaseReport {
        scenario: *scenario,
        branch,
        steps,
        cone_angle: sol.beta,
        azimuth_offset: sol.azimuth_offset,
        limiting: sol.limiting,
        convention: "exponent_terms",
        alternatives: alternatives(&sol, &analytic)?,
        analytic,
        discrepancy: Discrepancy {
            geometric,
            dynamical,
            within_tolerance: geometric <= ORACLE_TOLERANCE && dynamical <= ORACLE_TOLERANCE,
            tolerance: ORACLE_TOLERANCE,
        },
        norm_drift: traj.norm_drift(),
        numeric,
        notes: NOTES.to_vec(),
    };
    Ok((report, traj))
}

/// Runs the computation described by `config` without touching the filesystem.
pub fn evaluate(config: &RunConfig) -> Result<RunResult> {
    let scenario = config.internal_scenario();
    let (phases, trajectory) = phase_report(&scenario, config.branch, config.steps)?;
    let mut warnings = Vec::new();
    if !phases.numeric.cyclic {
        warnings.push(format!(
            "non-cyclic evolution: defect {} exceeds 1e-6; geometric phase unreliable",
            num(phases.numeric.cyclicity_defect)
        ));
    }
    if phases.limiting {
        warnings.push("cone relation on its limiting branch (zero denominator); angle pinned to pi/2".into());
    }
    if !phases.numeric.stepwise_consistent {
        warnings.push("stepwise phase accumulation disagrees with the dynamical phase beyond its error bound".into());
    }

    let faraday = match config.internal_drive() {
        Some(drive) => {
            let drive = drive?;
            let samples = config.drive.as_ref().map(|d| d.samples).unwrap_or(33);
            let report = faraday_compare(&scenario, config.branch, &drive, samples, config.steps)?;
            if report.non_cyclic {
                warnings.push("faraday comparison: a sample's eigenstate was not cyclic".into());
            }
            if report.limiting {
                warnings.push("faraday comparison: a sample sat on the limiting cone branch".into());
            }
            Some(report)
        }
        None => None,
    };

    let si = match (config.units, config.time_unit(), &faraday) {
        (UnitMode::Si, Some(tau), Some(report)) => {
            let units = UnitSystem::si();
            let vpi = units.volts_per_internal(tau)?;
            let b_z = match config.scenario {
                Scenario::Stern(s) => s.b_z,
                _ => 0.0,
            };
            Some(SiSummary {
                amplitude_volts: report.max_flux * vpi,
                hbar_omega_joule: config.hbar_omega.unwrap_or(0.0),
                mu_bz_joule: units.mu() * b_z,
                time_unit_seconds: tau,
                volts_per_internal: vpi,
            })
        }
        _ => None,
    };

    Ok(RunResult {
        phases,
        trajectory,
        faraday,
        si,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn flagged(&self) -> bool {
        !self.result.warnings.is_empty()
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Evaluates `config` and writes its outputs into `out`.
pub fn run(config: &Config, out: &Path) -> Result<RunOutcome> {
    let base = config.base();
    let result = evaluate(base)?;
    create_dir(out)?;
    let mut files = Vec::new();
    if base.emit.trajectory {
        let mut buf = Vec::new();
        result.trajectory.write_csv(&mut buf).map_err(|e| Error::io(out, e))?;
        write_file(out, "trajectory.csv", &String::from_utf8_lossy(&buf), &mut files)?;
    }
    if base.emit.phases {
        let mut json = serde_json::to_string_pretty(&result.phases).expect("report serializes");
        json.push('\n');
        write_file(out, "phases.json", &json, &mut files)?;
    }
    if let (true, Some(report)) = (base.emit.faraday, &result.faraday) {
        let mut buf = Vec::new();
        report.write_csv(&mut buf).map_err(|e| Error::io(out, e))?;
        write_file(out, "faraday.csv", &String::from_utf8_lossy(&buf), &mut files)?;
    }
    if base.emit.plotdata {
        for (name, body) in emit_plotdata(&result) {
            write_file(out, name, &body, &mut files)?;
        }
    }
    write_file(out, "summary.txt", &run_summary(config, &result), &mut files)?;
    Ok(RunOutcome { result, files })
}

/// Plot-ready whitespace-separated tables: the Bloch path and, with a drive,
/// the two motive-force series on a shared time column.
pub fn emit_plotdata(result: &RunResult) -> Vec<(&'static str, String)> {
    let mut files = Vec::new();
    let mut bloch_path = String::from("# sx sy sz\n");
    for s in &result.trajectory.states {
        let n = bloch(s);
        let _ = writeln!(bloch_path, "{} {} {}", num(n.nx), num(n.ny), num(n.nz));
    }
    files.push(("bloch_path.dat", bloch_path));
    if let Some(r) = &result.faraday {
        let mut overlay = String::from("# t eps_force eps_flux\n");
        for k in 0..r.t.len() {
            let _ = writeln!(overlay, "{} {} {}", num(r.t[k]), num(r.eps_force[k]), num(r.eps_flux[k]));
        }
        files.push(("faraday_overlay.dat", overlay));
    }
    files
}

fn run_summary(config: &Config, r: &RunResult) -> String {
    let p = &r.phases;
    let mut s = String::new();
    let _ = writeln!(s, "spinfaraday run");
    let _ = writeln!(s, "config_sha256 {}", config.hash());
    let _ = writeln!(s, "scenario {}", p.scenario.kind());
    let _ = writeln!(s, "branch {}", p.branch);
    let _ = writeln!(s, "steps {}", p.steps);
    let _ = writeln!(s, "cone_angle {}", num(p.cone_angle));
    let _ = writeln!(s, "analytic_dynamical {}", num(p.analytic.dynamical));
    let _ = writeln!(s, "analytic_geometric {}", num(p.analytic.geometric));
    let _ = writeln!(s, "numeric_dynamical {}", num(p.numeric.dynamical));
    let _ = writeln!(s, "numeric_geometric {}", num(p.numeric.geometric));
    let _ = writeln!(s, "cyclicity_defect {}", num(p.numeric.cyclicity_defect));
    let _ = writeln!(
        s,
        "oracle_discrepancy geometric={} dynamical={} tolerance={} {}",
        num(p.discrepancy.geometric),
        num(p.discrepancy.dynamical),
        num(p.discrepancy.tolerance),
        if p.discrepancy.within_tolerance { "ok" } else { "EXCEEDED" }
    );
    if let Some(f) = &r.faraday {
        let _ = writeln!(
            s,
            "faraday max_abs_discrepancy={} max_abs_eps_flux={} relative={}",
            num(f.max_discrepancy),
            num(f.max_flux),
            num(f.relative_discrepancy())
        );
        let _ = writeln!(s, "faraday ledger_additivity={}", num(f.additivity_error()));
    }
    if let Some(si) = &r.si {
        let _ = writeln!(s, "si motive_force_amplitude_volts {}", num(si.amplitude_volts));
        let _ = writeln!(s, "si hbar_omega_joule {}", num(si.hbar_omega_joule));
        let _ = writeln!(s, "si mu_bz_joule {}", num(si.mu_bz_joule));
        let _ = writeln!(s, "si time_unit_seconds {}", num(si.time_unit_seconds));
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(s, "WARNINGS");
        for w in &r.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub cone: Option<f64>,
    pub dynamical: Option<f64>,
    pub geometric: Option<f64>,
    pub defect: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn ok(&self) -> bool {
        self.geometric.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: Param,
    pub rows: Vec<SweepRow>,
}

fn sweep_point(value: f64, cfg: &RunConfig) -> SweepRow {
    let failed = |e: Error| SweepRow {
        value,
        cone: None,
        dynamical: None,
        geometric: None,
        defect: None,
        status: format!("error: {}", e.to_string().replace([',', '\n'], ";")),
    };
    match phase_report(&cfg.internal_scenario(), cfg.branch, cfg.steps) {
        Ok((p, _)) => SweepRow {
            value,
            cone: Some(p.cone_angle),
            dynamical: Some(p.numeric.dynamical),
            geometric: Some(p.numeric.geometric),
            defect: Some(p.numeric.cyclicity_defect),
            status: if p.limiting {
                "limiting".into()
            } else if !p.numeric.cyclic {
                "non_cyclic".into()
            } else {
                "ok".into()
            },
        },
        Err(e) => failed(e),
    }
}

/// Evaluates every sweep point on a pool of `jobs` threads (all cores when
/// `None`). Rows come back sorted by swept value; with `unwrap` set the
/// geometric column is shifted by multiples of 2π to stay continuous.
pub fn sweep_table(config: &SweepConfig, jobs: Option<usize>) -> Result<SweepTable> {
    let runs = config.runs();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| runs.par_iter().map(|(v, cfg)| sweep_point(*v, cfg)).collect());
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    if config.unwrap {
        let mut prev: Option<f64> = None;
        for row in rows.iter_mut().filter(|r| r.ok()) {
            let g = row.geometric.expect("filtered");
            let g = match prev {
                Some(p) => nearest_branch(g, p),
                None => g,
            };
            row.geometric = Some(g);
            prev = Some(g);
        }
    } else {
        for row in rows.iter_mut().filter(|r| r.ok()) {
            row.geometric = row.geometric.map(principal);
        }
    }
    Ok(SweepTable {
        parameter: config.parameter,
        rows,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SweepTable {
    /// CSV `value,cone,dynamical,geometric,defect,status`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value,cone,dynamical,geometric,defect,status\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                num(r.value),
                opt(r.cone),
                opt(r.dynamical),
                opt(r.geometric),
                opt(r.defect),
                r.status
            );
        }
        s
    }

    /// `value geometric dynamical`, successful rows only.
    pub fn to_plotdata(&self) -> String {
        let mut s = format!("# {} geometric dynamical\n", self.parameter);
        for r in self.rows.iter().filter(|r| r.ok()) {
            let _ = writeln!(s, "{} {} {}", num(r.value), opt(r.geometric), opt(r.dynamical));
        }
        s
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }

    /// Largest change of the geometric column between neighbouring rows.
    pub fn max_geometric_jump(&self) -> f64 {
        let g: Vec<f64> = self.rows.iter().filter_map(|r| r.geometric).collect();
        g.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub table: SweepTable,
    pub files: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn flagged(&self) -> bool {
        self.table.failures() > 0
    }
}

/// Runs a sweep and writes `sweep.csv`, `summary.txt` and, when enabled, `sweep_phases.dat`.
pub fn sweep(config: &Config, out: &Path, jobs: Option<usize>) -> Result<SweepOutcome> {
    let Config::Sweep(sc) = config else {
        return Err(Error::Config(vec!["sweep: config has no [sweep] section".into()]));
    };
    let table = sweep_table(sc, jobs)?;
    create_dir(out)?;
    let mut files = Vec::new();
    write_file(out, "sweep.csv", &table.to_csv(), &mut files)?;
    if sc.base.emit.plotdata {
        write_file(out, "sweep_phases.dat", &table.to_plotdata(), &mut files)?;
    }
    let mut summary = String::from("spinfaraday sweep\n");
    let _ = writeln!(summary, "config_sha256 {}", config.hash());
    let _ = writeln!(summary, "parameter {}", sc.parameter);
    let _ = writeln!(summary, "points {}", table.rows.len());
    let _ = writeln!(summary, "flagged_points {}", table.failures());
    let _ = writeln!(summary, "unwrap {}", sc.unwrap);
    let _ = writeln!(summary, "max_adjacent_geometric_jump {}", num(table.max_geometric_jump()));
    write_file(out, "summary.txt", &summary, &mut files)?;
    Ok(SweepOutcome { table, files })
}
