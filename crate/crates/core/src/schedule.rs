//! Ramp functions and the instantaneous system Hamiltonian
//! `H(t) = A_c(t) H_c + A_n(t) H_n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{re, CMatrix};
use crate::spinops::{Projection, SpinOperatorSet};
use crate::{Error, Real, Result};

/// Where the initial coherent state sits on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartAxis {
    /// Ground state of `-Jx`, on the equator.
    Equatorial,
    /// Ground state of `c . J` with `<Jz> = n`.
    MatchedLatitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule<T: Real> {
    duration: T,
    omega_max: T,
    chi_max: T,
    target: Projection,
    start: StartAxis,
}

/// Ramp amplitudes and their time derivatives at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp<T> {
    pub a_c: T,
    pub a_n: T,
    pub da_c: T,
    pub da_n: T,
}

impl<T: Real> DriveSchedule<T> {
    pub fn new(
        duration: T,
        omega_max: T,
        chi_max: T,
        target: Projection,
        start: StartAxis,
    ) -> Result<Self> {
        if !(duration > T::zero()) || !duration.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("must be positive and finite, got {duration}"),
            });
        }
        if !(chi_max > T::zero()) || !chi_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "chi_max",
                reason: format!("must be positive and finite, got {chi_max}"),
            });
        }
        if !(omega_max >= T::zero()) || !omega_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_max",
                reason: format!("must be non-negative and finite, got {omega_max}"),
            });
        }
        Ok(DriveSchedule {
            duration,
            omega_max,
            chi_max,
            target,
            start,
        })
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn omega_max(&self) -> T {
        self.omega_max
    }

    pub fn chi_max(&self) -> T {
        self.chi_max
    }

    pub fn target(&self) -> Projection {
        self.target
    }

    pub fn start(&self) -> StartAxis {
        self.start
    }

    pub fn with_omega_max(&self, omega_max: T) -> Result<Self> {
        Self::new(
            self.duration,
            omega_max,
            self.chi_max,
            self.target,
            self.start,
        )
    }

    /// Same drive in units where `chi_max = 1`: times are multiplied and
    /// strengths divided by `chi_max`.
    pub fn normalized(&self) -> Self {
        DriveSchedule {
            duration: self.duration * self.chi_max,
            omega_max: self.omega_max / self.chi_max,
            chi_max: T::one(),
            target: self.target,
            start: self.start,
        }
    }

    /// `A_c = w cos^3(pi t / 2T)`, `A_n = chi sin^3(pi t / 2T)` and their
    /// exact derivatives.
    pub fn ramp_at(&self, t: T) -> Result<Ramp<T>> {
        let slack = self.duration * T::of(1e-12);
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(Error::TimeOutOfRange {
                t: t.as_f64(),
                duration: self.duration.as_f64(),
            });
        }
        let t = t.max(T::zero()).min(self.duration);
        let rate = T::of(PI) / (T::of(2.0) * self.duration);
        let x = rate * t;
        let (s, c) = (x.sin(), x.cos());
        let three = T::of(3.0);
        Ok(Ramp {
            a_c: self.omega_max * c * c * c,
            a_n: self.chi_max * s * s * s,
            da_c: -three * self.omega_max * c * c * s * rate,
            da_n: three * self.chi_max * s * s * c * rate,
        })
    }
}

/// Unit vector `c = -(sqrt(1 - (2n/N)^2), 0, 2n/N)` whose coherent ground
/// state has `<Jz> = n`.
pub fn target_axis<T: Real>(n_atoms: usize, n: Projection) -> Result<[T; 3]> {
    if n_atoms == 0 {
        return Err(Error::EmptySystem);
    }
    n.check_range(n_atoms)?;
    let r = n.twice() as f64 / n_atoms as f64;
    let x = (1.0 - r * r).max(0.0).sqrt();
    Ok([T::of(-x), T::zero(), T::of(-r)])
}

/// The two fixed pieces `H_c = c . J` and `H_n = (Jz - n I)^2`.
///
/// `H_n` carries unit strength; the nonlinearity `chi_max` enters through
/// `A_n(t)`.
#[derive(Debug, Clone)]
pub struct HamiltonianAssembly<T: Real> {
    ops: SpinOperatorSet<T>,
    target: Projection,
    start: StartAxis,
    axis: [T; 3],
    h_c: CMatrix<T>,
    h_n: CMatrix<T>,
}

impl<T: Real> HamiltonianAssembly<T> {
    pub fn new(ops: SpinOperatorSet<T>, schedule: &DriveSchedule<T>) -> Result<Self> {
        schedule.target().check_for(ops.n_atoms())?;
        Self::build(ops, schedule)
    }

    /// Skips the parity check so a half-integer-free target can be used with
    /// odd `N`. The ground state of `H_n` is then a degenerate pair.
    pub fn new_any_parity(ops: SpinOperatorSet<T>, schedule: &DriveSchedule<T>) -> Result<Self> {
        Self::build(ops, schedule)
    }

    fn build(ops: SpinOperatorSet<T>, schedule: &DriveSchedule<T>) -> Result<Self> {
        let target = schedule.target();
        target.check_range(ops.n_atoms())?;
        let axis = match schedule.start() {
            StartAxis::Equatorial => [-T::one(), T::zero(), T::zero()],
            StartAxis::MatchedLatitude => target_axis(ops.n_atoms(), target)?,
        };
        let h_c = ops.projection_along(axis);
        let s = ops.shifted_jz(target.value());
        let h_n = &s * &s;
        Ok(HamiltonianAssembly {
            ops,
            target,
            start: schedule.start(),
            axis,
            h_c,
            h_n,
        })
    }

    pub fn ops(&self) -> &SpinOperatorSet<T> {
        &self.ops
    }

    pub fn n_atoms(&self) -> usize {
        self.ops.n_atoms()
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn target(&self) -> Projection {
        self.target
    }

    pub fn axis(&self) -> [T; 3] {
        self.axis
    }

    pub fn h_c(&self) -> &CMatrix<T> {
        &self.h_c
    }

    pub fn h_n(&self) -> &CMatrix<T> {
        &self.h_n
    }

    pub fn combine(&self, a_c: T, a_n: T) -> CMatrix<T> {
        &self.h_c * re(a_c) + &self.h_n * re(a_n)
    }

    /// `(H(t), dH/dt(t))`.
    pub fn hamiltonian_at(
        &self,
        schedule: &DriveSchedule<T>,
        t: T,
    ) -> Result<(CMatrix<T>, CMatrix<T>)> {
        if schedule.target() != self.target || schedule.start() != self.start {
            return Err(Error::InvalidParameter {
                name: "schedule",
                reason: format!(
                    "schedule targets n = {} ({:?}) but the assembly was built for n = {} ({:?})",
                    schedule.target(),
                    schedule.start(),
                    self.target,
                    self.start
                ),
            });
        }
        let r = schedule.ramp_at(t)?;
        Ok((self.combine(r.a_c, r.a_n), self.combine(r.da_c, r.da_n)))
    }
}
