//! Trajectory runs, sweeps, field maps and pulse-sequence studies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cdspin::blochfield::{expectation_field, q_function, torque_field, FieldValues, SphereGrid};
use cdspin::calibration::{calibrate_omega, CalibrationSettings};
use cdspin::counterdiabatic::averaged_alpha_table;
use cdspin::propagator::{
    evolve, evolve_converged, jz_distribution, CompensationMode, Propagator, SQUEEZING_FLOOR_DB,
    SQUEEZING_FLOOR_FRACTION,
};
use cdspin::schedule::{DriveSchedule, HamiltonianAssembly, StartAxis};
use cdspin::seqcompile::{
    build_l1_split, build_l2_triple, build_l3_l4_nested, commutator_cycle_labeled, halving_order,
    GeneratorLabel, SequenceReport,
};
use cdspin::spinops::{compensator_basis, make_spin_ops};
use cdspin::{CMatrix, Projection, StateVector, Trajectory};
use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AtomCount, Axis, ModeItem, OmegaSpec, Outputs, RunConfig};
use crate::error::CliError;
use crate::output::{num, write_json, Table};

/// Tolerance on the final fidelity when `check_convergence` is on.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationEcho {
    pub target: f64,
    pub fidelity: f64,
    pub refined: bool,
    /// `(omega_max, F)` pairs in evaluation order.
    pub evaluated: Vec<(f64, f64)>,
}

/// A config with the drive strength pinned down.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: RunConfig,
    pub omega_max: f64,
    pub omega_source: &'static str,
    pub calibration: Option<CalibrationEcho>,
}

impl Resolved {
    /// The drive in units where `chi_max = 1`. Outputs are scaled back.
    pub fn schedule(&self) -> Result<DriveSchedule<f64>, CliError> {
        let c = &self.cfg;
        Ok(DriveSchedule::new(c.duration, self.omega_max, c.chi_max, c.n, c.start)?.normalized())
    }

    /// Config text that reproduces this run without recalibrating.
    pub fn config_text(&self) -> String {
        let mut c = self.cfg.clone();
        c.omega = OmegaSpec::Value(self.omega_max);
        c.to_text()
    }
}

/// Atom numbers in the support that can host the target projection.
pub fn hosts(cfg: &RunConfig) -> Vec<usize> {
    cfg.atoms
        .support()
        .into_iter()
        .filter(|&n| cfg.n.check_for(n).is_ok())
        .collect()
}

/// Host closest to the middle of the support.
fn nominal_host(cfg: &RunConfig) -> usize {
    let mid = cfg.atoms.nominal() as i64;
    hosts(cfg)
        .into_iter()
        .min_by_key(|&n| ((n as i64 - mid).abs(), n))
        .expect("validated configs have a host")
}

pub fn resolve(cfg: &RunConfig) -> Result<Resolved, CliError> {
    let (omega_max, source, calibration) = match cfg.omega {
        OmegaSpec::Value(w) => (w, "config", None),
        OmegaSpec::Default => (cfg.atoms.nominal() as f64 * cfg.chi_max, "default", None),
        OmegaSpec::Calibrate => {
            let template =
                DriveSchedule::new(cfg.duration, cfg.chi_max, cfg.chi_max, cfg.n, cfg.start)?
                    .normalized();
            let settings = CalibrationSettings {
                target: cfg.calibration_target,
                steps: cfg.steps,
                ..CalibrationSettings::default()
            };
            let cal = calibrate_omega(nominal_host(cfg), &template, &settings)?;
            let echo = CalibrationEcho {
                target: cfg.calibration_target,
                fidelity: cal.fidelity,
                refined: cal.refined,
                evaluated: cal.evaluated,
            };
            (cal.omega_max * cfg.chi_max, "calibrated", Some(echo))
        }
    };
    Ok(Resolved {
        cfg: cfg.clone(),
        omega_max,
        omega_source: source,
        calibration,
    })
}

fn mode_for(
    item: ModeItem,
    cfg: &RunConfig,
    schedule: &DriveSchedule<f64>,
) -> Result<CompensationMode<f64>, CliError> {
    let count = item.count(cfg.k);
    Ok(match item {
        ModeItem::None => CompensationMode::None,
        ModeItem::Exact => CompensationMode::ExactHB,
        ModeItem::Partial(_) => CompensationMode::Partial {
            count,
            costs: cfg.costs_for(count),
        },
        ModeItem::Averaged(_) => {
            let support = cfg.atoms.support();
            let weight = 1.0 / support.len() as f64;
            let weighted: Vec<(usize, f64)> = support.into_iter().map(|n| (n, weight)).collect();
            let table =
                averaged_alpha_table(&weighted, schedule, count, &cfg.costs_for(count), cfg.steps)?;
            CompensationMode::AveragedAlphas(table)
        }
    })
}

/// Trajectories for every hosting atom number under one mode.
pub struct ModeRun {
    pub item: ModeItem,
    pub label: String,
    pub members: Vec<(usize, Trajectory)>,
    pub skipped: Vec<usize>,
    pub table_flags: Option<TableFlags>,
    pub ensemble: Ensemble,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TableFlags {
    pub mixed_parity: bool,
    pub dropped_entries: usize,
}

/// Uniformly weighted mixture over the members. For a single member this
/// is that member's trajectory.
pub struct Ensemble {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub squeezing_db: Vec<f64>,
    /// Member mean of each `alpha_k`.
    pub alphas: Vec<Vec<f64>>,
    pub initial_hist: BTreeMap<Projection, f64>,
    pub final_hist: BTreeMap<Projection, f64>,
}

fn histogram(psi: &StateVector, weight: f64, into: &mut BTreeMap<Projection, f64>) {
    let n_atoms = psi.n_atoms() as i64;
    for (i, p) in jz_distribution(psi).into_iter().enumerate() {
        *into
            .entry(Projection::from_twice(2 * i as i64 - n_atoms))
            .or_insert(0.0) += weight * p;
    }
}

fn ensemble(members: &[(usize, Trajectory)]) -> Ensemble {
    let w = 1.0 / members.len() as f64;
    let first = &members[0].1;
    let rows = first.times.len();
    let mut out = Ensemble {
        times: first.times.clone(),
        fidelity: vec![0.0; rows],
        squeezing_db: vec![0.0; rows],
        alphas: vec![vec![0.0; first.alphas[0].len()]; rows],
        initial_hist: BTreeMap::new(),
        final_hist: BTreeMap::new(),
    };
    if members.len() == 1 {
        out.fidelity = first.fidelity.clone();
        out.squeezing_db = first.squeezing_db.clone();
        out.alphas = first.alphas.clone();
    } else {
        let mean_atoms: f64 = members.iter().map(|(n, _)| *n as f64 * w).sum();
        let floor = SQUEEZING_FLOOR_FRACTION * mean_atoms / 4.0;
        for j in 0..rows {
            let (mut mean, mut second) = (0.0, 0.0);
            for (_, tr) in members {
                out.fidelity[j] += w * tr.fidelity[j];
                for (a, b) in out.alphas[j].iter_mut().zip(&tr.alphas[j]) {
                    *a += w * b;
                }
                let (m, var) = tr.states[j].jz_moments();
                mean += w * m;
                second += w * (var + m * m);
            }
            let var = second - mean * mean;
            out.squeezing_db[j] = if var >= floor {
                10.0 * (var / (mean_atoms / 4.0)).log10()
            } else {
                SQUEEZING_FLOOR_DB
            };
        }
    }
    for (_, tr) in members {
        histogram(&tr.states[0], w, &mut out.initial_hist);
        histogram(tr.final_state(), w, &mut out.final_hist);
    }
    out
}

pub fn run_mode(resolved: &Resolved, item: ModeItem) -> Result<ModeRun, CliError> {
    let cfg = &resolved.cfg;
    let schedule = resolved.schedule()?;
    let mode = mode_for(item, cfg, &schedule)?;
    let table_flags = match &mode {
        CompensationMode::AveragedAlphas(t) => Some(TableFlags {
            mixed_parity: t.mixed_parity,
            dropped_entries: t.dropped,
        }),
        _ => None,
    };
    let hosting = hosts(cfg);
    let members = hosting
        .par_iter()
        .map(|&n_atoms| {
            let asm = HamiltonianAssembly::new(make_spin_ops(n_atoms)?, &schedule)?;
            let tr = if cfg.check_convergence {
                evolve_converged(&asm, &schedule, &mode, cfg.steps, CONVERGENCE_TOLERANCE)?.0
            } else {
                evolve(&asm, &schedule, &mode, cfg.steps)?
            };
            if tr.norm_drift > 1e-10 {
                return Err(CliError::Numerical(format!(
                    "N = {n_atoms}: norm drifted by {:e}",
                    tr.norm_drift
                )));
            }
            Ok((n_atoms, tr))
        })
        .collect::<Vec<Result<_, CliError>>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let skipped = cfg
        .atoms
        .support()
        .into_iter()
        .filter(|n| !hosting.contains(n))
        .collect();
    let mut ensemble = ensemble(&members);
    for t in &mut ensemble.times {
        *t /= cfg.chi_max;
    }
    for a in ensemble.alphas.iter_mut().flatten() {
        *a *= cfg.chi_max;
    }
    Ok(ModeRun {
        item,
        label: item.label(cfg.k),
        members,
        skipped,
        table_flags,
        ensemble,
    })
}

#[derive(Debug, Serialize)]
struct MemberSummary {
    #[serde(rename = "N")]
    n_atoms: usize,
    final_fidelity: f64,
    final_squeezing_db: f64,
}

#[derive(Debug, Serialize)]
struct Settings {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n_atoms: Option<usize>,
    #[serde(rename = "N_min", skip_serializing_if = "Option::is_none")]
    n_min: Option<usize>,
    #[serde(rename = "N_max", skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    n: f64,
    #[serde(rename = "T")]
    duration: f64,
    omega_max: f64,
    omega_source: &'static str,
    chi_max: f64,
    steps: usize,
    mode: String,
    #[serde(rename = "K")]
    k: usize,
    costs: Vec<f64>,
    start: StartAxis,
    outputs: Outputs,
    out: String,
    seed: u64,
    n_theta: usize,
    n_phi: usize,
    field_time: f64,
    seq_dt: f64,
    check_convergence: bool,
    calibration_target: f64,
}

fn settings(resolved: &Resolved, item: ModeItem) -> Settings {
    let c = &resolved.cfg;
    let (n_atoms, n_min, n_max) = match c.atoms {
        AtomCount::Fixed(n) => (Some(n), None, None),
        AtomCount::Uniform { min, max } => (None, Some(min), Some(max)),
    };
    let count = item.count(c.k);
    Settings {
        n_atoms,
        n_min,
        n_max,
        n: c.n.into(),
        duration: c.duration,
        omega_max: resolved.omega_max,
        omega_source: resolved.omega_source,
        chi_max: c.chi_max,
        steps: c.steps,
        mode: item.label(c.k),
        k: count,
        costs: c.costs_for(count),
        start: c.start,
        outputs: c.outputs,
        out: c.out_dir.display().to_string(),
        seed: c.seed,
        n_theta: c.n_theta,
        n_phi: c.n_phi,
        field_time: c.field_time.unwrap_or(c.duration),
        seq_dt: c.seq_dt,
        check_convergence: c.check_convergence,
        calibration_target: c.calibration_target,
    }
}

#[derive(Debug, Serialize)]
struct Summary {
    final_fidelity: f64,
    final_squeezing_db: f64,
    max_alpha: Vec<f64>,
    worst_fidelity: f64,
    norm_drift: f64,
    members: Vec<MemberSummary>,
    skipped_atom_numbers: Vec<usize>,
    alpha_table: Option<TableFlags>,
    calibration: Option<CalibrationEcho>,
    settings: Settings,
    config: String,
}

impl ModeRun {
    pub fn final_fidelity(&self) -> f64 {
        *self.ensemble.fidelity.last().expect("nonempty")
    }

    pub fn final_squeezing_db(&self) -> f64 {
        *self.ensemble.squeezing_db.last().expect("nonempty")
    }

    pub fn worst_fidelity(&self) -> f64 {
        self.ensemble
            .fidelity
            .iter()
            .fold(1.0, |a: f64, &b| a.min(b))
    }

    pub fn max_alpha(&self) -> Vec<f64> {
        let k = self.ensemble.alphas.first().map_or(0, Vec::len);
        let mut peaks = vec![0.0f64; k];
        for row in &self.ensemble.alphas {
            for (p, a) in peaks.iter_mut().zip(row) {
                *p = p.max(a.abs());
            }
        }
        peaks
    }

    fn summary(&self, resolved: &Resolved) -> Summary {
        let mut config = resolved.config_text();
        // the per-mode file must re-run just this mode
        let mut single = resolved.cfg.clone();
        single.modes = vec![self.item];
        if resolved.cfg.modes.len() > 1 {
            single.omega = OmegaSpec::Value(resolved.omega_max);
            config = single.to_text();
        }
        Summary {
            final_fidelity: self.final_fidelity(),
            final_squeezing_db: self.final_squeezing_db(),
            max_alpha: self.max_alpha(),
            worst_fidelity: self.worst_fidelity(),
            norm_drift: self
                .members
                .iter()
                .fold(0.0, |a: f64, (_, t)| a.max(t.norm_drift)),
            members: self
                .members
                .iter()
                .map(|(n, t)| MemberSummary {
                    n_atoms: *n,
                    final_fidelity: t.final_fidelity(),
                    final_squeezing_db: t.final_squeezing_db(),
                })
                .collect(),
            skipped_atom_numbers: self.skipped.clone(),
            alpha_table: self.table_flags,
            calibration: resolved.calibration.clone(),
            settings: settings(resolved, self.item),
            config,
        }
    }

    fn write_trajectory(&self, dir: &Path) -> Result<(), CliError> {
        let e = &self.ensemble;
        let k = e.alphas.first().map_or(0, Vec::len);
        let mut header: Vec<String> = ["t", "F", "squeezing_db"].map(String::from).to_vec();
        header.extend((1..=k).map(|i| format!("alpha_{i}")));
        let mut table = Table::new(&header);
        let mut row = Vec::with_capacity(3 + k);
        for j in 0..e.times.len() {
            row.clear();
            row.extend([e.times[j], e.fidelity[j], e.squeezing_db[j]]);
            row.extend(&e.alphas[j]);
            table.numeric_row(&row);
        }
        table.write(&dir.join("trajectory.csv"))?;

        let mut hist = Table::new(&["m".into(), "initial".into(), "final".into()]);
        for (m, p0) in &e.initial_hist {
            let p1 = e.final_hist.get(m).copied().unwrap_or(0.0);
            hist.numeric_row(&[f64::from(*m), *p0, p1]);
        }
        hist.write(&dir.join("jz_hist.csv"))
    }
}

fn mode_dir(cfg: &RunConfig, label: &str) -> PathBuf {
    if cfg.modes.len() == 1 {
        cfg.out_dir.clone()
    } else {
        cfg.out_dir.join(label)
    }
}

/// Executes every mode and writes the requested outputs.
pub fn run(cfg: &RunConfig) -> Result<Vec<ModeRun>, CliError> {
    let resolved = resolve(cfg)?;
    let runs = run_all_modes(&resolved)?;
    for r in &runs {
        let dir = mode_dir(cfg, &r.label);
        if cfg.outputs.trajectory {
            r.write_trajectory(&dir)?;
        }
        write_json(&dir.join("summary.json"), &r.summary(&resolved))?;
        if cfg.outputs.fields {
            write_fields(
                &resolved,
                r.item,
                cfg.field_time.unwrap_or(cfg.duration),
                &dir,
            )?;
        }
    }
    if cfg.outputs.sequence {
        write_sequence_report(cfg)?;
    }
    Ok(runs)
}

fn run_all_modes(resolved: &Resolved) -> Result<Vec<ModeRun>, CliError> {
    resolved
        .cfg
        .modes
        .par_iter()
        .map(|&item| run_mode(resolved, item))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Debug, Serialize)]
struct PointSummary<'a> {
    axis: &'a str,
    value: &'a str,
    omega_max: f64,
    modes: Vec<PointMode>,
}

#[derive(Debug, Serialize)]
struct PointMode {
    mode: String,
    final_fidelity: f64,
    final_squeezing_db: f64,
    worst_fidelity: f64,
    max_alpha: Vec<f64>,
}

pub struct SweepRow {
    pub value: String,
    pub mode: String,
    pub omega_max: f64,
    pub final_fidelity: f64,
    pub final_squeezing_db: f64,
    pub worst_fidelity: f64,
}

/// One config per value; points run in parallel, each writing its own
/// summary, and the aggregate table is assembled afterwards.
pub fn sweep(cfg: &RunConfig, axis: Axis, values: &[String]) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("--values: empty list".into()));
    }
    let points: Vec<RunConfig> = values
        .iter()
        .map(|v| cfg.with_axis(axis, v))
        .collect::<Result<_, _>>()?;
    let results: Vec<Result<Vec<SweepRow>, CliError>> = points
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(i, (point, value))| {
            let resolved = resolve(point)?;
            let runs = run_all_modes(&resolved)?;
            let summary = PointSummary {
                axis: axis.name(),
                value,
                omega_max: resolved.omega_max,
                modes: runs
                    .iter()
                    .map(|r| PointMode {
                        mode: r.label.clone(),
                        final_fidelity: r.final_fidelity(),
                        final_squeezing_db: r.final_squeezing_db(),
                        worst_fidelity: r.worst_fidelity(),
                        max_alpha: r.max_alpha(),
                    })
                    .collect(),
            };
            let dir = cfg.out_dir.join(format!("sweep_{}", axis.name()));
            write_json(&dir.join(format!("point_{i:03}.json")), &summary)?;
            Ok(runs
                .iter()
                .map(|r| SweepRow {
                    value: value.clone(),
                    mode: r.label.clone(),
                    omega_max: resolved.omega_max,
                    final_fidelity: r.final_fidelity(),
                    final_squeezing_db: r.final_squeezing_db(),
                    worst_fidelity: r.worst_fidelity(),
                })
                .collect())
        })
        .collect();
    let rows: Vec<SweepRow> = results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    let header: Vec<String> = [
        axis.name(),
        "mode",
        "omega_max",
        "final_F",
        "final_squeezing_db",
        "worst_F",
    ]
    .map(String::from)
    .to_vec();
    let mut table = Table::new(&header);
    for r in &rows {
        let value: f64 = r.value.parse().expect("validated by with_axis");
        table.row(&[
            num(value),
            r.mode.clone(),
            num(r.omega_max),
            num(r.final_fidelity),
            num(r.final_squeezing_db),
            num(r.worst_fidelity),
        ]);
    }
    table.write(&cfg.out_dir.join(format!("sweep_{}.csv", axis.name())))?;
    Ok(rows)
}

fn grid_table(grid: &SphereGrid<f64>) -> Table {
    let values = grid.values().expect("field grids carry values");
    let header: Vec<String> = match values {
        FieldValues::Scalar(_) => ["theta", "phi", "value"].map(String::from).to_vec(),
        FieldValues::Vector(_) => ["theta", "phi", "vx", "vy", "vz"]
            .map(String::from)
            .to_vec(),
    };
    let mut table = Table::new(&header);
    for i in 0..grid.len() {
        let (theta, phi) = grid.node(i);
        match values {
            FieldValues::Scalar(v) => table.numeric_row(&[theta, phi, v[i]]),
            FieldValues::Vector(v) => table.numeric_row(&[theta, phi, v[i][0], v[i][1], v[i][2]]),
        }
    }
    table
}

/// State and Hamiltonians at time `t`, stepping with the run's step size.
fn state_at(
    asm: &HamiltonianAssembly<f64>,
    schedule: &DriveSchedule<f64>,
    mode: &CompensationMode<f64>,
    steps: usize,
    t: f64,
) -> Result<(StateVector, CMatrix<f64>, CMatrix<f64>), CliError> {
    let prop = Propagator::new(asm, schedule, mode)?;
    let substeps = ((steps as f64 * t / schedule.duration()).round() as usize).max(1);
    let dt = t / substeps as f64;
    let mut psi = prop.ground_at(0.0)?;
    for j in 0..substeps {
        psi = prop.step(&psi, j as f64 * dt, dt)?;
    }
    let (total, _) = prop.total_hamiltonian(t)?;
    let (system, _) = asm.hamiltonian_at(schedule, t)?;
    Ok((psi, total, system))
}

/// Writes `field_*.csv` for the state and drive at time `t`.
pub fn write_fields(
    resolved: &Resolved,
    item: ModeItem,
    t: f64,
    dir: &Path,
) -> Result<(), CliError> {
    let cfg = &resolved.cfg;
    let AtomCount::Fixed(n_atoms) = cfg.atoms else {
        return Err(CliError::Config("fields need a single N".into()));
    };
    if !(0.0..=cfg.duration).contains(&t) {
        return Err(CliError::Config(format!(
            "--time {t} outside [0, {}]",
            cfg.duration
        )));
    }
    let schedule = resolved.schedule()?;
    let mode = mode_for(item, cfg, &schedule)?;
    let ops = make_spin_ops::<f64>(n_atoms)?;
    let asm = HamiltonianAssembly::new(ops.clone(), &schedule)?;
    let (psi, total, system) = state_at(&asm, &schedule, &mode, cfg.steps, t * cfg.chi_max)?;
    let chi = Complex::new(cfg.chi_max, 0.0);
    let (total, system) = (total * chi, system * chi);
    let grid = SphereGrid::uniform(cfg.n_theta, cfg.n_phi)?;

    let mut fields = vec![
        ("q", q_function(&ops, &psi, &grid)?),
        ("energy", expectation_field(&ops, &system, &grid)?),
        ("torque", torque_field(&ops, &system, &grid)?),
    ];
    if !matches!(item, ModeItem::None) {
        fields.push((
            "torque_compensator",
            torque_field(&ops, &(&total - &system), &grid)?,
        ));
    }
    let basis = compensator_basis(&ops, cfg.n, 4)?;
    for (k, l) in basis.operators().iter().enumerate() {
        fields.push((
            ["torque_L1", "torque_L2", "torque_L3", "torque_L4"][k],
            torque_field(&ops, l, &grid)?,
        ));
    }
    for (name, grid) in &fields {
        grid_table(grid).write(&dir.join(format!("field_{name}.csv")))?;
    }
    Ok(())
}

pub fn fields(cfg: &RunConfig, t: f64) -> Result<(), CliError> {
    let resolved = resolve(cfg)?;
    for &item in &cfg.modes {
        write_fields(&resolved, item, t, &mode_dir(cfg, &item.label(cfg.k)))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SequenceEntry {
    name: &'static str,
    predicted_order: u32,
    measured_order: f64,
    sequence: SequenceReport,
}

#[derive(Debug, Serialize)]
struct SequenceStudy {
    #[serde(rename = "N")]
    n_atoms: usize,
    chi_max: f64,
    dt: f64,
    sequences: Vec<SequenceEntry>,
}

/// Pulse programs emulating the commutator cycle and `L1`..`L4`, with the
/// residual scaling measured by halving `dt`.
pub fn sequence_study(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let n_atoms = nominal_host(cfg);
    let ops = make_spin_ops::<f64>(n_atoms)?;
    let chi = cfg.chi_max;
    let jz2 = ops.jz() * ops.jz();
    let cycle = |dt: f64| {
        commutator_cycle_labeled(
            ops.jx(),
            GeneratorLabel::axis("Jx", [1.0, 0.0, 0.0], 1),
            &jz2,
            GeneratorLabel::axis("Jz", [0.0, 0.0, 1.0], 2),
            dt,
        )
    };
    let l1 = |dt: f64| build_l1_split(chi, dt, &ops);
    let l2 = |dt: f64| build_l2_triple(chi, dt, &ops);
    let l3 = |dt: f64| build_l3_l4_nested(&build_l1_split(chi, dt, &ops)?, &ops);
    let l4 = |dt: f64| build_l3_l4_nested(&build_l2_triple(chi, dt, &ops)?, &ops);

    let dt = cfg.seq_dt;
    let mut sequences = Vec::new();
    type Builder<'a> = &'a dyn Fn(f64) -> cdspin::Result<cdspin::PulseSequence>;
    let builders: [(&'static str, Builder); 5] = [
        ("commutator cycle", &cycle),
        ("L1 split", &l1),
        ("L2 triple", &l2),
        ("L3 nested", &l3),
        ("L4 nested", &l4),
    ];
    for (name, build) in builders {
        let seq = build(dt)?;
        sequences.push(SequenceEntry {
            name,
            predicted_order: seq.predicted_order(),
            measured_order: halving_order(build, dt)?,
            sequence: seq.report()?,
        });
    }
    let study = SequenceStudy {
        n_atoms,
        chi_max: chi,
        dt,
        sequences,
    };
    serde_json::to_value(study).map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn write_sequence_report(cfg: &RunConfig) -> Result<(), CliError> {
    let study = sequence_study(cfg)?;
    write_json(&cfg.out_dir.join("sequence_report.json"), &study)
}
