//! Time evolution under `H(t)` plus an optional compensating term.
//!
//! Steps use the exponential midpoint rule
//! `psi(t + d) = exp(-i d H_tot(t + d/2)) psi(t)`, with the exponential taken
//! by spectral decomposition, so every step is exactly unitary up to
//! rounding. Fidelity is measured against the ground state of `H(t)`
//! recomputed at each output instant.

use nalgebra::ComplexField;

use crate::counterdiabatic::{
    eigensystem, ground_state_derivative, ground_tracking_compensator, solve_coefficients,
    AlphaTable,
};
use crate::linalg::{apply_exp_i_hermitian, CMatrix};
use crate::schedule::{DriveSchedule, HamiltonianAssembly};
use crate::spinops::{compensator_basis_with_shift, CompensatorBasis, StateVector};
use crate::{Error, Real, Result};

/// Steps used when the caller does not choose; keeps the final fidelity
/// within 1e-8 of the doubled-step value for `chi_max T = 2`.
pub const DEFAULT_STEPS: usize = 5000;

pub const MIN_STEPS: usize = 100;

/// Variances below `SQUEEZING_FLOOR_FRACTION * N/4` report [`SQUEEZING_FLOOR_DB`].
pub const SQUEEZING_FLOOR_FRACTION: f64 = 1e-14;
pub const SQUEEZING_FLOOR_DB: f64 = -140.0;

#[derive(Debug, Clone)]
pub enum CompensationMode<T: Real> {
    None,
    /// The exact compensator of the instantaneous spectrum.
    ExactHB,
    /// `K` shifted operators solved against the instantaneous ground state.
    Partial {
        count: usize,
        costs: Vec<T>,
    },
    /// Coefficients read from a precomputed table.
    AveragedAlphas(AlphaTable<T>),
}

impl<T: Real> CompensationMode<T> {
    pub fn partial(count: usize) -> Self {
        CompensationMode::Partial {
            count,
            costs: vec![T::zero(); count],
        }
    }

    /// Number of `alpha` columns this mode reports.
    pub fn operator_count(&self) -> usize {
        match self {
            CompensationMode::None | CompensationMode::ExactHB => 0,
            CompensationMode::Partial { count, .. } => *count,
            CompensationMode::AveragedAlphas(table) => table.operator_count(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CompensationMode::None => "none".into(),
            CompensationMode::ExactHB => "exact".into(),
            CompensationMode::Partial { count, .. } => format!("partial{count}"),
            CompensationMode::AveragedAlphas(_) => "averaged".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub fidelity: Vec<T>,
    pub squeezing_db: Vec<T>,
    /// One row per instant; rows are empty without partial compensation.
    pub alphas: Vec<Vec<T>>,
    /// Largest `| ||psi|| - 1 |` seen along the run.
    pub norm_drift: T,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &StateVector<T> {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_fidelity(&self) -> T {
        *self.fidelity.last().expect("trajectory is never empty")
    }

    pub fn final_squeezing_db(&self) -> T {
        *self.squeezing_db.last().expect("trajectory is never empty")
    }

    /// `max_t |alpha_k(t)|` per operator.
    pub fn alpha_peaks(&self) -> Vec<T> {
        let k = self.alphas.first().map_or(0, Vec::len);
        let mut peaks = vec![T::zero(); k];
        for row in &self.alphas {
            for (p, a) in peaks.iter_mut().zip(row) {
                *p = p.max(a.abs());
            }
        }
        peaks
    }

    /// `min_t F(t)`.
    pub fn worst_fidelity(&self) -> T {
        self.fidelity.iter().fold(T::one(), |acc, &f| acc.min(f))
    }
}

/// `|<psi|ground>|^2`, clamped into `[0, 1]`.
pub fn fidelity<T: Real>(psi: &StateVector<T>, ground: &StateVector<T>) -> Result<T> {
    if psi.dim() != ground.dim() {
        return Err(Error::DimensionMismatch {
            expected: ground.dim(),
            found: psi.dim(),
        });
    }
    let f = psi.inner(ground).modulus_squared();
    Ok(f.max(T::zero()).min(T::one()))
}

/// `10 log10(Var(Jz) / (N/4))`, floored at [`SQUEEZING_FLOOR_DB`].
pub fn squeezing_db<T: Real>(psi: &StateVector<T>) -> T {
    let coherent = T::of(psi.n_atoms() as f64 / 4.0);
    let (_, var) = psi.jz_moments();
    if !(var >= T::of(SQUEEZING_FLOOR_FRACTION) * coherent) {
        return T::of(SQUEEZING_FLOOR_DB);
    }
    T::of(10.0) * (var / coherent).log10()
}

/// Probability of each `m`, ascending from `-N/2`.
pub fn jz_distribution<T: Real>(psi: &StateVector<T>) -> Vec<T> {
    psi.amplitudes()
        .iter()
        .map(|z| z.modulus_squared())
        .collect()
}

/// Evaluates `H_tot(t)` for a fixed assembly, schedule and mode.
pub struct Propagator<'a, T: Real> {
    assembly: &'a HamiltonianAssembly<T>,
    schedule: &'a DriveSchedule<T>,
    mode: &'a CompensationMode<T>,
    basis: Option<CompensatorBasis<T>>,
}

impl<'a, T: Real> Propagator<'a, T> {
    pub fn new(
        assembly: &'a HamiltonianAssembly<T>,
        schedule: &'a DriveSchedule<T>,
        mode: &'a CompensationMode<T>,
    ) -> Result<Self> {
        // surfaces a schedule/assembly mismatch before any work
        assembly.hamiltonian_at(schedule, T::zero())?;
        let basis = match mode {
            CompensationMode::None | CompensationMode::ExactHB => None,
            CompensationMode::Partial { count, costs } => {
                if costs.len() != *count {
                    return Err(Error::DimensionMismatch {
                        expected: *count,
                        found: costs.len(),
                    });
                }
                Some(compensator_basis_with_shift(
                    assembly.ops(),
                    assembly.target().value(),
                    *count,
                )?)
            }
            CompensationMode::AveragedAlphas(table) => {
                let d = schedule.duration();
                let times = table.times();
                let slack = T::of(1e-9) * d;
                if (times[0] - T::zero()).abs() > slack
                    || (times[times.len() - 1] - d).abs() > slack
                {
                    return Err(Error::InvalidParameter {
                        name: "alpha table",
                        reason: "table does not span the schedule duration".into(),
                    });
                }
                Some(compensator_basis_with_shift(
                    assembly.ops(),
                    assembly.target().value(),
                    table.operator_count(),
                )?)
            }
        };
        Ok(Propagator {
            assembly,
            schedule,
            mode,
            basis,
        })
    }

    /// `H(t)` plus compensation, and the `alpha` used (empty if none).
    pub fn total_hamiltonian(&self, t: T) -> Result<(CMatrix<T>, Vec<T>)> {
        let (h, dh) = self.assembly.hamiltonian_at(self.schedule, t)?;
        match self.mode {
            CompensationMode::None => Ok((h, Vec::new())),
            CompensationMode::ExactHB => {
                let eig = eigensystem(&h)?;
                let hb = ground_tracking_compensator(&eig, &dh)?;
                Ok((h + hb, Vec::new()))
            }
            CompensationMode::Partial { costs, .. } => {
                let basis = self.basis.as_ref().expect("basis built for partial mode");
                let eig = eigensystem(&h)?;
                let gd = ground_state_derivative(&eig, &dh)?;
                let sol = solve_coefficients(basis, &eig.ground(), &gd, costs)?;
                let hc = basis.combine(&sol.alphas);
                Ok((h + hc, sol.alphas))
            }
            CompensationMode::AveragedAlphas(table) => {
                let basis = self.basis.as_ref().expect("basis built for averaged mode");
                let alphas = table.at(t);
                let hc = basis.combine(&alphas);
                Ok((h + hc, alphas))
            }
        }
    }

    /// One midpoint step from `t` to `t + dt`; negative `dt` steps backward.
    pub fn step(&self, psi: &StateVector<T>, t: T, dt: T) -> Result<StateVector<T>> {
        let mid = t + dt / T::of(2.0);
        let (h, _) = self.total_hamiltonian(mid)?;
        let next = apply_exp_i_hermitian(&h, -dt, psi.amplitudes());
        Ok(StateVector::from_unit(next))
    }

    /// Ground state of the bare `H(t)`.
    /// Ground state of `H(t)`; a degenerate ground level has no well-defined
    /// reference and is an error.
    pub fn ground_at(&self, t: T) -> Result<StateVector<T>> {
        let (h, _) = self.assembly.hamiltonian_at(self.schedule, t)?;
        let eig = eigensystem(&h)?;
        eig.check_ground_gap()?;
        Ok(eig.ground())
    }
}

/// Propagates the ground state of `H(0)` over `[0, T]` in `steps` steps.
pub fn evolve<T: Real>(
    assembly: &HamiltonianAssembly<T>,
    schedule: &DriveSchedule<T>,
    mode: &CompensationMode<T>,
    steps: usize,
) -> Result<Trajectory<T>> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: format!("at least {MIN_STEPS} steps required, got {steps}"),
        });
    }
    let prop = Propagator::new(assembly, schedule, mode)?;
    let duration = schedule.duration();
    let time = |j: usize| duration * T::of(j as f64 / steps as f64);
    let dt = duration / T::of(steps as f64);

    let mut psi = prop.ground_at(T::zero())?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        fidelity: Vec::with_capacity(steps + 1),
        squeezing_db: Vec::with_capacity(steps + 1),
        alphas: Vec::with_capacity(steps + 1),
        norm_drift: T::zero(),
    };
    for j in 0..=steps {
        let t = time(j);
        if j > 0 {
            psi = prop.step(&psi, time(j - 1), dt)?;
        }
        let ground = prop.ground_at(t)?;
        let alphas = match mode {
            CompensationMode::None | CompensationMode::ExactHB => Vec::new(),
            _ => prop.total_hamiltonian(t)?.1,
        };
        let drift = (psi.norm() - T::one()).abs();
        if !drift.is_finite() {
            return Err(Error::NonConvergent {
                drift: f64::NAN,
                steps,
            });
        }
        traj.norm_drift = traj.norm_drift.max(drift);
        traj.fidelity.push(fidelity(&psi, &ground)?);
        traj.squeezing_db.push(squeezing_db(&psi));
        traj.alphas.push(alphas);
        traj.times.push(t);
        traj.states.push(psi.clone());
    }
    Ok(traj)
}

/// Runs with `steps` and `2 steps` and fails when the final fidelities differ
/// by more than `tolerance`.
pub fn evolve_converged<T: Real>(
    assembly: &HamiltonianAssembly<T>,
    schedule: &DriveSchedule<T>,
    mode: &CompensationMode<T>,
    steps: usize,
    tolerance: T,
) -> Result<(Trajectory<T>, T)> {
    let coarse = evolve(assembly, schedule, mode, steps)?;
    let fine_mode;
    let mode_for_fine = match mode {
        // the table is tied to the coarse grid; interpolation covers the rest
        CompensationMode::AveragedAlphas(_) => mode,
        other => {
            fine_mode = other.clone();
            &fine_mode
        }
    };
    let fine = evolve(assembly, schedule, mode_for_fine, 2 * steps)?;
    let drift = (fine.final_fidelity() - coarse.final_fidelity()).abs();
    if !(drift <= tolerance) {
        return Err(Error::NonConvergent {
            drift: drift.as_f64(),
            steps,
        });
    }
    Ok((coarse, drift))
}
