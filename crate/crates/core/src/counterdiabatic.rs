//! Exact and partial counterdiabatic compensation.
//!
//! For `H(t)|n> = E_n|n>` the exact compensator is
//! `H_B = i sum_n (|n'><n| - |n><n|n'><n|)`; keeping only the ground state
//! gives `H_B0 = i(|0'><0| - |0><0'|)`. When neither can be built, the
//! coefficients `alpha_k` of `H_C = sum_k alpha_k L_k` minimize
//! `||(H_C - H_B)|0>||` (plus an optional cost term) and follow from
//! `(A + diag(g)) alpha = C` with `A_mk = <{L_m, L_k}>` and
//! `C_k = i(<0|L_k|0'> - <0'|L_k|0>)`.
//!
//! Derivatives of eigenstates come from first-order perturbation theory in
//! the gauge `<n|n'> = 0`.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::linalg::{ensure_hermitian, hermitian_eigen, im, CMatrix, CVector};
use crate::schedule::{DriveSchedule, HamiltonianAssembly};
use crate::spinops::{compensator_basis_with_shift, make_spin_ops, CompensatorBasis, StateVector};
use crate::{Error, Real, Result};

/// Full spectral decomposition with energies ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem<T: Real> {
    energies: Vec<T>,
    states: CMatrix<T>,
}

pub fn eigensystem<T: Real>(h: &CMatrix<T>) -> Result<EigenSystem<T>> {
    ensure_hermitian(h, T::structural_tol())?;
    let (energies, states) = hermitian_eigen(h);
    Ok(EigenSystem { energies, states })
}

impl<T: Real> EigenSystem<T> {
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Eigenvectors as columns, aligned with [`Self::energies`].
    pub fn states(&self) -> &CMatrix<T> {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground(&self) -> StateVector<T> {
        StateVector::from_unit(self.states.column(0).into_owned())
    }

    pub fn ground_gap(&self) -> T {
        if self.energies.len() < 2 {
            return T::max_value().unwrap_or_else(T::one);
        }
        self.energies[1] - self.energies[0]
    }

    /// Spectral norm of the decomposed matrix.
    pub fn norm(&self) -> T {
        self.energies
            .iter()
            .fold(T::zero(), |acc, e| acc.max(e.abs()))
    }

    /// Gaps below this value count as degenerate.
    pub fn gap_threshold(&self) -> T {
        T::structural_tol() * self.norm()
    }

    pub(crate) fn check_ground_gap(&self) -> Result<()> {
        let gap = self.ground_gap();
        let threshold = self.gap_threshold();
        if !(gap >= threshold && gap > T::zero()) {
            return Err(Error::Degenerate {
                gap: gap.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        Ok(())
    }

    /// `<m|dH|n>` in the eigenbasis.
    fn in_eigenbasis(&self, dh: &CMatrix<T>) -> CMatrix<T> {
        self.states.adjoint() * dh * &self.states
    }
}

fn check_dims<T: Real>(eig: &EigenSystem<T>, m: &CMatrix<T>) -> Result<()> {
    if m.nrows() != eig.dim() || m.ncols() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            found: m.nrows(),
        });
    }
    Ok(())
}

/// `|0'> = sum_{n != 0} |n><n|dH|0> / (E_0 - E_n)`, orthogonal to `|0>`.
pub fn ground_state_derivative<T: Real>(
    eig: &EigenSystem<T>,
    dh: &CMatrix<T>,
) -> Result<CVector<T>> {
    check_dims(eig, dh)?;
    eig.check_ground_gap()?;
    let ground = eig.states.column(0);
    let coupling = eig.states.adjoint() * (dh * ground);
    let e0 = eig.energies[0];
    let mut coords = CVector::<T>::zeros(eig.dim());
    for n in 1..eig.dim() {
        coords[n] = coupling[n].unscale(e0 - eig.energies[n]);
    }
    Ok(&eig.states * coords)
}

/// Exact compensator `H_B`; requires a nondegenerate spectrum.
pub fn full_compensator<T: Real>(eig: &EigenSystem<T>, dh: &CMatrix<T>) -> Result<CMatrix<T>> {
    check_dims(eig, dh)?;
    let threshold = eig.gap_threshold();
    for w in eig.energies.windows(2) {
        let gap = w[1] - w[0];
        if !(gap >= threshold) {
            return Err(Error::Degenerate {
                gap: gap.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
    }
    Ok(assemble_compensator(eig, dh, threshold))
}

/// `H_B` with the couplings between nearly degenerate excited levels dropped.
///
/// Its action on the ground state is identical to [`full_compensator`]; only
/// excited-state couplings that diverge as levels pair up are removed. The
/// ground gap must still be open.
pub fn ground_tracking_compensator<T: Real>(
    eig: &EigenSystem<T>,
    dh: &CMatrix<T>,
) -> Result<CMatrix<T>> {
    check_dims(eig, dh)?;
    eig.check_ground_gap()?;
    Ok(assemble_compensator(eig, dh, eig.gap_threshold()))
}

fn assemble_compensator<T: Real>(
    eig: &EigenSystem<T>,
    dh: &CMatrix<T>,
    threshold: T,
) -> CMatrix<T> {
    let dim = eig.dim();
    let y = eig.in_eigenbasis(dh);
    let mut z = CMatrix::<T>::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            if m == n {
                continue;
            }
            let gap = eig.energies[n] - eig.energies[m];
            if gap.abs() < threshold {
                continue;
            }
            // i <m|n'> with <m|n'> = <m|dH|n> / (E_n - E_m)
            z[(m, n)] = im(T::one()) * y[(m, n)].unscale(gap);
        }
    }
    &eig.states * z * eig.states.adjoint()
}

/// `H_B0 = i(|0'><0| - |0><0'|)`.
pub fn single_state_compensator<T: Real>(
    ground: &StateVector<T>,
    gderiv: &CVector<T>,
) -> Result<CMatrix<T>> {
    let psi = ground.amplitudes();
    if gderiv.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            found: gderiv.len(),
        });
    }
    let overlap = psi.dotc(gderiv).modulus();
    if overlap > T::structural_tol() * T::one().max(gderiv.norm()) {
        return Err(Error::GaugeViolation {
            overlap: overlap.as_f64(),
        });
    }
    let i = im(T::one());
    Ok((gderiv * psi.adjoint() - psi * gderiv.adjoint()) * i)
}

/// Coefficients of a partial compensator and the linear system behind them.
#[derive(Debug, Clone)]
pub struct CompensationSolution<T: Real> {
    pub alphas: Vec<T>,
    /// `A_mk = <L_m L_k + L_k L_m>`, without costs.
    pub gram: DMatrix<T>,
    /// `C_k`.
    pub rhs: DVector<T>,
    pub costs: Vec<T>,
    /// `||(H_C - H_B)|0>||`, root-mean-square over the support when averaged.
    pub residual_norm: T,
    /// Diagonal shift added on top of the costs, zero unless the system was
    /// ill-conditioned.
    pub regularization: T,
}

/// Per-entry pieces of the normal equations for one Hilbert space.
struct Moments<T: Real> {
    gram: DMatrix<T>,
    rhs: DVector<T>,
    /// `L_k|0>`
    images: Vec<CVector<T>>,
    /// `i|0'>` which equals `H_B|0>`
    target: CVector<T>,
}

fn moments<T: Real>(
    basis: &CompensatorBasis<T>,
    ground: &StateVector<T>,
    gderiv: &CVector<T>,
) -> Result<Moments<T>> {
    let psi = ground.amplitudes();
    let dim = psi.len();
    if basis.n_atoms() + 1 != dim {
        return Err(Error::DimensionMismatch {
            expected: basis.n_atoms() + 1,
            found: dim,
        });
    }
    if gderiv.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: gderiv.len(),
        });
    }
    let k = basis.len();
    let images: Vec<CVector<T>> = basis.operators().iter().map(|l| l * psi).collect();
    let two = T::of(2.0);
    let mut gram = DMatrix::<T>::zeros(k, k);
    let mut rhs = DVector::<T>::zeros(k);
    for m in 0..k {
        for j in m..k {
            let v = two * images[m].dotc(&images[j]).re;
            gram[(m, j)] = v;
            gram[(j, m)] = v;
        }
        // i(z - conj z) with z = <0|L_k|0'>
        rhs[m] = -two * images[m].dotc(gderiv).im;
    }
    Ok(Moments {
        gram,
        rhs,
        images,
        target: gderiv * im(T::one()),
    })
}

fn check_costs<T: Real>(costs: &[T], k: usize) -> Result<()> {
    if costs.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: costs.len(),
        });
    }
    if costs.iter().any(|g| !(*g >= T::zero()) || !g.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "costs",
            reason: "costs must be finite and non-negative".into(),
        });
    }
    Ok(())
}

/// Solves `(A + diag(g)) x = C` by Cholesky, adding a Tikhonov shift
/// `1e-12 tr(A)/K` when the condition estimate exceeds the scalar's limit.
fn solve_shifted<T: Real>(gram: &DMatrix<T>, rhs: &DVector<T>, costs: &[T]) -> Result<(Vec<T>, T)> {
    let k = gram.nrows();
    if rhs.iter().all(|c| *c == T::zero()) {
        return Ok((vec![T::zero(); k], T::zero()));
    }
    let mut system = gram.clone();
    for (i, g) in costs.iter().enumerate() {
        system[(i, i)] += *g;
    }
    let spectrum = SymmetricEigen::new(system.clone()).eigenvalues;
    let hi = spectrum.iter().fold(T::zero(), |a, &e| a.max(e.abs()));
    let lo = spectrum.iter().fold(hi, |a, &e| a.min(e));
    let condition = if lo > T::zero() {
        hi / lo
    } else {
        T::max_value().unwrap_or(hi)
    };
    let mut shift = T::zero();
    if !(condition <= T::condition_limit()) {
        shift = T::of(1e-12) * gram.trace() / T::of(k as f64);
        if !(shift > T::zero()) {
            return Err(Error::IllConditioned {
                condition: condition.as_f64(),
            });
        }
        for i in 0..k {
            system[(i, i)] += shift;
        }
    }
    let chol = system.cholesky().ok_or(Error::IllConditioned {
        condition: condition.as_f64(),
    })?;
    let x = chol.solve(rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned {
            condition: condition.as_f64(),
        });
    }
    Ok((x.iter().copied().collect(), shift))
}

fn residual<T: Real>(m: &Moments<T>, alphas: &[T]) -> T {
    let mut r = -m.target.clone();
    for (img, &a) in m.images.iter().zip(alphas) {
        r += img * Complex::new(a, T::zero());
    }
    r.norm_squared()
}

/// Best `alpha` for a single Hilbert space.
pub fn solve_coefficients<T: Real>(
    basis: &CompensatorBasis<T>,
    ground: &StateVector<T>,
    gderiv: &CVector<T>,
    costs: &[T],
) -> Result<CompensationSolution<T>> {
    if basis.is_empty() {
        return Err(Error::OperatorCount(0));
    }
    check_costs(costs, basis.len())?;
    let m = moments(basis, ground, gderiv)?;
    let (alphas, regularization) = solve_shifted(&m.gram, &m.rhs, costs)?;
    let residual_norm = residual(&m, &alphas).sqrt();
    Ok(CompensationSolution {
        alphas,
        gram: m.gram,
        rhs: m.rhs,
        costs: costs.to_vec(),
        residual_norm,
        regularization,
    })
}

/// One atom number in a fluctuating-`N` ensemble.
#[derive(Debug, Clone, Copy)]
pub struct AveragedEntry<'a, T: Real> {
    pub weight: T,
    pub basis: &'a CompensatorBasis<T>,
    pub ground: &'a StateVector<T>,
    pub gderiv: &'a CVector<T>,
}

/// Shared `alpha` minimizing the `p(N)`-weighted sum of residuals.
///
/// Weights are normalized to sum to one; zero-weight entries are skipped.
pub fn averaged_coefficients<T: Real>(
    entries: &[AveragedEntry<'_, T>],
    costs: &[T],
) -> Result<CompensationSolution<T>> {
    let total = entries.iter().fold(T::zero(), |acc, e| acc + e.weight);
    if entries.is_empty() || !(total > T::zero()) {
        return Err(Error::EmptySupport);
    }
    if entries.iter().any(|e| !(e.weight >= T::zero())) {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: "weights must be non-negative".into(),
        });
    }
    let k = entries[0].basis.len();
    if k == 0 {
        return Err(Error::OperatorCount(0));
    }
    check_costs(costs, k)?;
    let mut gram = DMatrix::<T>::zeros(k, k);
    let mut rhs = DVector::<T>::zeros(k);
    let mut parts = Vec::with_capacity(entries.len());
    for e in entries {
        if e.basis.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: e.basis.len(),
            });
        }
        if e.weight == T::zero() {
            continue;
        }
        let p = e.weight / total;
        let m = moments(e.basis, e.ground, e.gderiv)?;
        gram += &m.gram * p;
        rhs += &m.rhs * p;
        parts.push((p, m));
    }
    let (alphas, regularization) = solve_shifted(&gram, &rhs, costs)?;
    let residual_norm = parts
        .iter()
        .fold(T::zero(), |acc, (p, m)| acc + *p * residual(m, &alphas))
        .sqrt();
    Ok(CompensationSolution {
        alphas,
        gram,
        rhs,
        costs: costs.to_vec(),
        residual_norm,
        regularization,
    })
}

/// Precomputed `alpha_k(t)` on a uniform grid, queried by linear
/// interpolation.
#[derive(Debug, Clone)]
pub struct AlphaTable<T: Real> {
    times: Vec<T>,
    alphas: Vec<Vec<T>>,
    /// Some atom number in the support cannot host the target Dicke state.
    pub mixed_parity: bool,
    /// Number of (time, N) pairs left out because the ground gap closed.
    pub dropped: usize,
}

impl<T: Real> AlphaTable<T> {
    pub fn new(times: Vec<T>, alphas: Vec<Vec<T>>) -> Result<Self> {
        if times.len() < 2 || times.len() != alphas.len() {
            return Err(Error::InvalidParameter {
                name: "alpha table",
                reason: "needs at least two rows and one alpha vector per time".into(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                name: "alpha table",
                reason: "times must be strictly increasing".into(),
            });
        }
        let k = alphas[0].len();
        if alphas.iter().any(|a| a.len() != k) {
            return Err(Error::InvalidParameter {
                name: "alpha table",
                reason: "ragged alpha rows".into(),
            });
        }
        Ok(AlphaTable {
            times,
            alphas,
            mixed_parity: false,
            dropped: 0,
        })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.alphas
    }

    pub fn operator_count(&self) -> usize {
        self.alphas[0].len()
    }

    pub fn at(&self, t: T) -> Vec<T> {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.alphas[0].clone();
        }
        if t >= self.times[last] {
            return self.alphas[last].clone();
        }
        let hi = self.times.partition_point(|&x| x < t);
        if self.times[hi] == t {
            return self.alphas[hi].clone();
        }
        let lo = hi - 1;
        let w = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.alphas[lo]
            .iter()
            .zip(&self.alphas[hi])
            .map(|(&a, &b)| a + (b - a) * w)
            .collect()
    }
}

/// Shared coefficients for a distribution of atom numbers, evaluated on the
/// half-step grid `t_j = j T / (2 steps)` so that a propagation with `steps`
/// steps hits table nodes at every instant and midpoint.
///
/// Each atom number contributes the ground-state track of its own
/// `H(t)`; atom numbers whose ground gap closes at some instant are left out
/// of that instant's sum and counted in [`AlphaTable::dropped`].
pub fn averaged_alpha_table<T: Real>(
    support: &[(usize, T)],
    schedule: &DriveSchedule<T>,
    count: usize,
    costs: &[T],
    steps: usize,
) -> Result<AlphaTable<T>> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "must be positive".into(),
        });
    }
    check_costs(costs, count)?;
    let target = schedule.target();
    let nodes = 2 * steps + 1;
    let times: Vec<T> = (0..nodes)
        .map(|j| schedule.duration() * T::of(j as f64 / (2 * steps) as f64))
        .collect();

    type Row<T> = Option<(DMatrix<T>, DVector<T>)>;
    let per_n: Vec<Result<(T, Vec<Row<T>>)>> = support
        .par_iter()
        .map(|&(n_atoms, weight)| {
            let ops = make_spin_ops::<T>(n_atoms)?;
            let assembly = HamiltonianAssembly::new_any_parity(ops, schedule)?;
            let basis = compensator_basis_with_shift(assembly.ops(), target.value(), count)?;
            let mut rows = Vec::with_capacity(nodes);
            for &t in &times {
                let (h, dh) = assembly.hamiltonian_at(schedule, t)?;
                let eig = eigensystem(&h)?;
                match ground_state_derivative(&eig, &dh) {
                    Ok(gd) => {
                        let m = moments(&basis, &eig.ground(), &gd)?;
                        rows.push(Some((m.gram, m.rhs)));
                    }
                    Err(Error::Degenerate { .. }) => rows.push(None),
                    Err(e) => return Err(e),
                }
            }
            Ok((weight, rows))
        })
        .collect();
    let per_n = per_n.into_iter().collect::<Result<Vec<_>>>()?;

    let mut alphas = Vec::with_capacity(nodes);
    let mut dropped = 0;
    for j in 0..nodes {
        let mut gram = DMatrix::<T>::zeros(count, count);
        let mut rhs = DVector::<T>::zeros(count);
        let mut total = T::zero();
        for (weight, rows) in &per_n {
            match &rows[j] {
                Some((a, c)) => {
                    gram += a * *weight;
                    rhs += c * *weight;
                    total += *weight;
                }
                None => dropped += 1,
            }
        }
        if !(total > T::zero()) {
            return Err(Error::EmptySupport);
        }
        gram /= total;
        rhs /= total;
        alphas.push(solve_shifted(&gram, &rhs, costs)?.0);
    }
    let mut table = AlphaTable::new(times, alphas)?;
    table.mixed_parity = support
        .iter()
        .any(|&(n, w)| w > T::zero() && target.check_for(n).is_err());
    table.dropped = dropped;
    Ok(table)
}
