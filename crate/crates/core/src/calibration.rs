//! Choice of `omega_max` by matching the uncompensated final fidelity.
//!
//! The coarse grid is evaluated first. If no grid point comes within
//! `accept` of the target, the search halves `omega_max` downward from the
//! smallest grid value until the fidelity crosses the target and then
//! bisects the bracket.

use rayon::prelude::*;

use crate::propagator::{evolve, CompensationMode};
use crate::schedule::{DriveSchedule, HamiltonianAssembly};
use crate::spinops::make_spin_ops;
use crate::{Error, Real, Result};

/// `omega_max / chi_max` values tried first.
pub const COARSE_GRID: [f64; 6] = [5.0, 10.0, 15.0, 20.0, 30.0, 60.0];
pub const TARGET_FIDELITY: f64 = 0.19;
pub const ACCEPT_WINDOW: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Calibration<T: Real> {
    /// In units of `chi_max`.
    pub omega_max: T,
    pub fidelity: T,
    /// Every `(omega_max, F)` evaluated, in evaluation order.
    pub evaluated: Vec<(T, T)>,
    pub refined: bool,
}

#[derive(Debug, Clone)]
pub struct CalibrationSettings<T: Real> {
    pub grid: Vec<T>,
    pub target: T,
    pub accept: T,
    /// Bisection stops once `|F - target|` falls below this.
    pub tolerance: T,
    pub steps: usize,
    pub max_halvings: usize,
    pub max_bisections: usize,
}

impl<T: Real> Default for CalibrationSettings<T> {
    fn default() -> Self {
        CalibrationSettings {
            grid: COARSE_GRID.iter().map(|&w| T::of(w)).collect(),
            target: T::of(TARGET_FIDELITY),
            accept: T::of(ACCEPT_WINDOW),
            tolerance: T::of(1e-4),
            steps: 2000,
            max_halvings: 12,
            max_bisections: 40,
        }
    }
}

/// Final uncompensated fidelity with `omega_max = omega * chi_max`.
pub fn uncompensated_fidelity<T: Real>(
    n_atoms: usize,
    template: &DriveSchedule<T>,
    omega: T,
    steps: usize,
) -> Result<T> {
    let schedule = template.with_omega_max(omega * template.chi_max())?;
    let assembly = HamiltonianAssembly::new(make_spin_ops(n_atoms)?, &schedule)?;
    Ok(evolve(&assembly, &schedule, &CompensationMode::None, steps)?.final_fidelity())
}

pub fn calibrate_omega<T: Real>(
    n_atoms: usize,
    template: &DriveSchedule<T>,
    settings: &CalibrationSettings<T>,
) -> Result<Calibration<T>> {
    if settings.grid.is_empty() || settings.grid.iter().any(|w| !(*w > T::zero())) {
        return Err(Error::InvalidParameter {
            name: "calibration grid",
            reason: "needs at least one positive value".into(),
        });
    }
    let run = |w: T| uncompensated_fidelity(n_atoms, template, w, settings.steps);
    let coarse: Vec<Result<(T, T)>> = settings
        .grid
        .par_iter()
        .map(|&w| run(w).map(|f| (w, f)))
        .collect();
    let mut evaluated = coarse.into_iter().collect::<Result<Vec<_>>>()?;
    let miss = |f: T| (f - settings.target).abs();
    let best = *evaluated
        .iter()
        .min_by(|a, b| {
            miss(a.1)
                .partial_cmp(&miss(b.1))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("grid is nonempty");
    if miss(best.1) <= settings.accept {
        return Ok(Calibration {
            omega_max: best.0,
            fidelity: best.1,
            evaluated,
            refined: false,
        });
    }

    let smallest = settings
        .grid
        .iter()
        .copied()
        .fold(settings.grid[0], |a, b| a.min(b));
    let mut upper = evaluated
        .iter()
        .copied()
        .find(|e| e.0 == smallest)
        .expect("smallest grid value was evaluated");
    let side = |f: T| f > settings.target;
    let mut lower = None;
    let mut w = smallest;
    for _ in 0..settings.max_halvings {
        w /= T::of(2.0);
        let f = run(w)?;
        evaluated.push((w, f));
        if side(f) != side(upper.1) {
            lower = Some((w, f));
            break;
        }
        upper = (w, f);
    }
    let Some(mut lower) = lower else {
        // no crossing below the grid; keep the closest value seen
        let best = *evaluated
            .iter()
            .min_by(|a, b| {
                miss(a.1)
                    .partial_cmp(&miss(b.1))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty");
        return Ok(Calibration {
            omega_max: best.0,
            fidelity: best.1,
            evaluated,
            refined: true,
        });
    };
    for _ in 0..settings.max_bisections {
        let mid = (lower.0 + upper.0) / T::of(2.0);
        let f = run(mid)?;
        evaluated.push((mid, f));
        if side(f) == side(lower.1) {
            lower = (mid, f);
        } else {
            upper = (mid, f);
        }
        if miss(f) <= settings.tolerance {
            break;
        }
    }
    let best = if miss(lower.1) <= miss(upper.1) {
        lower
    } else {
        upper
    };
    Ok(Calibration {
        omega_max: best.0,
        fidelity: best.1,
        evaluated,
        refined: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::StartAxis;
    use crate::Projection;

    fn template() -> DriveSchedule<f64> {
        DriveSchedule::new(2.0, 1.0, 1.0, Projection::ZERO, StartAxis::Equatorial).unwrap()
    }

    #[test]
    fn grid_hit_needs_no_refinement() {
        let f1 = uncompensated_fidelity(4, &template(), 1.0, 200).unwrap();
        let settings = CalibrationSettings {
            grid: vec![1.0, 2.0],
            target: f1,
            steps: 200,
            ..CalibrationSettings::default()
        };
        let cal = calibrate_omega(4, &template(), &settings).unwrap();
        assert!(!cal.refined);
        assert_eq!(cal.omega_max, 1.0);
        assert_eq!(cal.evaluated.len(), 2);
    }

    #[test]
    fn refinement_bisects_to_target() {
        let target = uncompensated_fidelity(6, &template(), 0.7, 200).unwrap();
        let settings = CalibrationSettings {
            grid: vec![4.0],
            target,
            accept: 1e-6,
            tolerance: 1e-6,
            steps: 200,
            ..CalibrationSettings::default()
        };
        let cal = calibrate_omega(6, &template(), &settings).unwrap();
        assert!(cal.refined);
        assert!((cal.fidelity - target).abs() <= 1e-6, "{cal:?}");
    }

    #[test]
    fn rejects_empty_grid() {
        let settings = CalibrationSettings {
            grid: Vec::new(),
            ..CalibrationSettings::default()
        };
        assert!(calibrate_omega(4, &template(), &settings).is_err());
    }
}
