//! Collective-spin operators on the symmetric `J = N/2` subspace.
//!
//! The basis is the `Jz` eigenbasis ordered by ascending `m`, so index `k`
//! holds `m = k - N/2`.

use std::fmt;

use nalgebra::{Complex, ComplexField};
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, expectation, im, re, CMatrix, CVector};
use crate::{Error, Real, Result};

/// An integer or half-integer spin projection, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "f64", try_from = "f64")]
pub struct Projection(i64);

impl Projection {
    pub const ZERO: Projection = Projection(0);

    pub fn from_twice(twice: i64) -> Self {
        Projection(twice)
    }

    pub fn integer(m: i64) -> Self {
        Projection(2 * m)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value<T: Real>(self) -> T {
        T::of(self.0 as f64 / 2.0)
    }

    /// Checks `|m| <= N/2` and that `m + N/2` is an integer.
    pub fn check_for(self, n_atoms: usize) -> Result<()> {
        self.check_range(n_atoms)?;
        if (self.0 - n_atoms as i64).rem_euclid(2) != 0 {
            return Err(Error::ParityMismatch {
                value: self.into(),
                n_atoms,
            });
        }
        Ok(())
    }

    pub fn check_range(self, n_atoms: usize) -> Result<()> {
        if self.0.unsigned_abs() > n_atoms as u64 {
            return Err(Error::ProjectionOutOfRange {
                value: self.into(),
                n_atoms,
            });
        }
        Ok(())
    }

    /// Basis index of this projection in an `N + 1` dimensional space.
    pub fn index(self, n_atoms: usize) -> Result<usize> {
        self.check_for(n_atoms)?;
        Ok(((self.0 + n_atoms as i64) / 2) as usize)
    }
}

impl TryFrom<f64> for Projection {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::NotHalfInteger { value });
        }
        Ok(Projection(twice.round() as i64))
    }
}

impl From<Projection> for f64 {
    fn from(p: Projection) -> f64 {
        p.0 as f64 / 2.0
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// `Jx`, `Jy`, `Jz` for `N` two-level atoms.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet<T: Real> {
    n_atoms: usize,
    jx: CMatrix<T>,
    jy: CMatrix<T>,
    jz: CMatrix<T>,
}

/// Builds the collective-spin matrices from the ladder elements
/// `<m+1|J+|m> = sqrt(J(J+1) - m(m+1))`.
pub fn make_spin_ops<T: Real>(n_atoms: usize) -> Result<SpinOperatorSet<T>> {
    if n_atoms == 0 {
        return Err(Error::EmptySystem);
    }
    let dim = n_atoms + 1;
    let j = n_atoms as f64 / 2.0;
    let mut jx = CMatrix::<T>::zeros(dim, dim);
    let mut jy = CMatrix::<T>::zeros(dim, dim);
    let mut jz = CMatrix::<T>::zeros(dim, dim);
    for k in 0..dim {
        let m = k as f64 - j;
        jz[(k, k)] = re(T::of(m));
        if k + 1 < dim {
            let half = T::of(0.5 * (j * (j + 1.0) - m * (m + 1.0)).sqrt());
            // J+ has its element at (k+1, k); Jx = (J+ + J-)/2, Jy = (J+ - J-)/2i
            jx[(k + 1, k)] = re(half);
            jx[(k, k + 1)] = re(half);
            jy[(k + 1, k)] = im(-half);
            jy[(k, k + 1)] = im(half);
        }
    }
    Ok(SpinOperatorSet {
        n_atoms,
        jx,
        jy,
        jz,
    })
}

impl<T: Real> SpinOperatorSet<T> {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// Total spin `J = N/2`.
    pub fn spin(&self) -> T {
        T::of(self.n_atoms as f64 / 2.0)
    }

    pub fn jx(&self) -> &CMatrix<T> {
        &self.jx
    }

    pub fn jy(&self) -> &CMatrix<T> {
        &self.jy
    }

    pub fn jz(&self) -> &CMatrix<T> {
        &self.jz
    }

    pub fn identity(&self) -> CMatrix<T> {
        CMatrix::identity(self.dim(), self.dim())
    }

    /// `J(J+1)`, the value of the Casimir on this subspace.
    pub fn casimir(&self) -> T {
        let j = self.spin();
        j * (j + T::one())
    }

    /// `Jz - shift * I`.
    pub fn shifted_jz(&self, shift: T) -> CMatrix<T> {
        let mut s = self.jz.clone();
        for k in 0..self.dim() {
            s[(k, k)] -= re(shift);
        }
        s
    }

    /// `c . J` for a real 3-vector.
    pub fn projection_along(&self, c: [T; 3]) -> CMatrix<T> {
        &self.jx * re(c[0]) + &self.jy * re(c[1]) + &self.jz * re(c[2])
    }
}

/// Normalized amplitudes over the `Jz` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    n_atoms: usize,
    amplitudes: CVector<T>,
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes whose norm is within the structural tolerance of one.
    pub fn new(amplitudes: CVector<T>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::EmptySystem);
        }
        let norm = amplitudes.norm();
        if (norm - T::one()).abs() > T::structural_tol() {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: format!("norm {} is not 1", norm),
            });
        }
        Ok(StateVector {
            n_atoms: amplitudes.len() - 1,
            amplitudes,
        })
    }

    /// Normalizes `amplitudes` and wraps them.
    pub fn normalized(amplitudes: CVector<T>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > T::zero()) || amplitudes.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "zero vector".into(),
            });
        }
        Self::new(amplitudes.unscale(norm))
    }

    pub(crate) fn from_unit(amplitudes: CVector<T>) -> Self {
        StateVector {
            n_atoms: amplitudes.len() - 1,
            amplitudes,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector<T> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector<T> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector<T>) -> Complex<T> {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Real part of `<self|M|self>`.
    pub fn expect(&self, m: &CMatrix<T>) -> T {
        expectation(m, &self.amplitudes).re
    }

    /// `(<Jx>, <Jy>, <Jz>)`.
    pub fn mean_spin(&self, ops: &SpinOperatorSet<T>) -> [T; 3] {
        [
            self.expect(ops.jx()),
            self.expect(ops.jy()),
            self.expect(ops.jz()),
        ]
    }

    /// `<Jz>` and `<Jz^2> - <Jz>^2` from the basis populations.
    pub fn jz_moments(&self) -> (T, T) {
        let half = T::of(self.n_atoms as f64 / 2.0);
        let mut mean = T::zero();
        let mut second = T::zero();
        for (k, z) in self.amplitudes.iter().enumerate() {
            let p = z.modulus_squared();
            let m = T::of(k as f64) - half;
            mean += p * m;
            second += p * m * m;
        }
        (mean, (second - mean * mean).max(T::zero()))
    }
}

/// The first `K` of the shifted compensating operators
/// `L1 = S Jy + Jy S`, `L2 = S Jy Jx + Jx Jy S`,
/// `L3 = S^3 Jy + Jy S^3`, `L4 = S^3 Jy Jx + Jx Jy S^3` with `S = Jz - n I`.
#[derive(Debug, Clone)]
pub struct CompensatorBasis<T: Real> {
    n_atoms: usize,
    shift: T,
    operators: Vec<CMatrix<T>>,
}

impl<T: Real> CompensatorBasis<T> {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn operators(&self) -> &[CMatrix<T>] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `sum_k alpha_k L_k`.
    pub fn combine(&self, alphas: &[T]) -> CMatrix<T> {
        let dim = self.n_atoms + 1;
        let mut h = CMatrix::<T>::zeros(dim, dim);
        for (l, &a) in self.operators.iter().zip(alphas) {
            h += l * re(a);
        }
        h
    }
}

pub fn compensator_basis<T: Real>(
    ops: &SpinOperatorSet<T>,
    n: Projection,
    count: usize,
) -> Result<CompensatorBasis<T>> {
    n.check_for(ops.n_atoms())?;
    compensator_basis_with_shift(ops, n.value(), count)
}

/// Same as [`compensator_basis`] for an arbitrary real shift, used when the
/// shift is not a valid projection for this `N` (mixed-parity averaging).
pub fn compensator_basis_with_shift<T: Real>(
    ops: &SpinOperatorSet<T>,
    shift: T,
    count: usize,
) -> Result<CompensatorBasis<T>> {
    if !(1..=4).contains(&count) {
        return Err(Error::OperatorCount(count));
    }
    let s = ops.shifted_jz(shift);
    let jy = ops.jy();
    let jx = ops.jx();
    let yx = jy * jx;
    let xy = jx * jy;
    let mut operators = Vec::with_capacity(count);
    operators.push(&s * jy + jy * &s);
    if count >= 2 {
        operators.push(&s * &yx + &xy * &s);
    }
    if count >= 3 {
        let s3 = &s * &s * &s;
        operators.push(&s3 * jy + jy * &s3);
        if count >= 4 {
            operators.push(&s3 * &yx + &xy * &s3);
        }
    }
    Ok(CompensatorBasis {
        n_atoms: ops.n_atoms(),
        shift,
        operators,
    })
}

/// `|Jz = m>`.
pub fn dicke_state<T: Real>(n_atoms: usize, m: Projection) -> Result<StateVector<T>> {
    if n_atoms == 0 {
        return Err(Error::EmptySystem);
    }
    let idx = m.index(n_atoms)?;
    let mut amps = CVector::<T>::zeros(n_atoms + 1);
    amps[idx] = re(T::one());
    Ok(StateVector::from_unit(amps))
}

/// Spin coherent state pointing along `(sin t cos p, sin t sin p, cos t)`.
///
/// Amplitudes are `sqrt(C(N, j+m)) cos(t/2)^(j+m) sin(t/2)^(j-m) e^{-i m p}`,
/// i.e. `exp(-i p Jz) exp(-i t Jy) |j, j>`.
pub fn coherent_state<T: Real>(
    ops: &SpinOperatorSet<T>,
    theta: T,
    phi: T,
) -> Result<StateVector<T>> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(Error::InvalidParameter {
            name: "theta/phi",
            reason: "angles must be finite".into(),
        });
    }
    let n = ops.n_atoms();
    let half_theta = theta.as_f64() / 2.0;
    let (c, s) = (half_theta.cos(), half_theta.sin());
    let ln_c = c.abs().ln();
    let ln_s = s.abs().ln();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let j = n as f64 / 2.0;
    let mut amps = CVector::<T>::zeros(n + 1);
    for (k, amp) in amps.iter_mut().enumerate() {
        let up = k; // j + m
        let down = n - k; // j - m
        let mut mag = 0.5 * (ln_fact[n] - ln_fact[up] - ln_fact[down]);
        let mut sign = 1.0;
        if up > 0 {
            mag += up as f64 * ln_c;
            if c < 0.0 && up % 2 == 1 {
                sign = -sign;
            }
        }
        if down > 0 {
            mag += down as f64 * ln_s;
            if s < 0.0 && down % 2 == 1 {
                sign = -sign;
            }
        }
        let m = k as f64 - j;
        let value = sign * mag.exp();
        *amp = cis(T::of(-m * phi.as_f64())).scale(T::of(value));
    }
    StateVector::normalized(amps)
}
