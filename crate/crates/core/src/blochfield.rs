//! Scalar and vector fields sampled on the Bloch sphere through spin
//! coherent states: Husimi `Q`, `<H>` and the torque `i<[H, J]>`.

use nalgebra::{Complex, ComplexField};
use rayon::prelude::*;

use crate::linalg::{commutator, ensure_hermitian, expectation, CMatrix};
use crate::spinops::{coherent_state, SpinOperatorSet, StateVector};
use crate::{Error, Real, Result};

pub const DEFAULT_THETAS: usize = 100;
pub const DEFAULT_PHIS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValues<T> {
    Scalar(Vec<T>),
    Vector(Vec<[T; 3]>),
}

/// Uniform grid with `theta` in `[0, pi]` (endpoints included) and `phi` in
/// `[0, 2 pi)`. Values are stored theta-major: node `(i, j)` sits at
/// `i * phis.len() + j`.
#[derive(Debug, Clone)]
pub struct SphereGrid<T: Real> {
    thetas: Vec<T>,
    phis: Vec<T>,
    values: Option<FieldValues<T>>,
}

impl<T: Real> SphereGrid<T> {
    pub fn uniform(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need at least 2x2 nodes, got {n_theta}x{n_phi}"),
            });
        }
        let pi = T::pi();
        let thetas = (0..n_theta)
            .map(|i| pi * T::of(i as f64 / (n_theta - 1) as f64))
            .collect();
        let phis = (0..n_phi)
            .map(|j| T::two_pi() * T::of(j as f64 / n_phi as f64))
            .collect();
        Ok(SphereGrid {
            thetas,
            phis,
            values: None,
        })
    }

    pub fn thetas(&self) -> &[T] {
        &self.thetas
    }

    pub fn phis(&self) -> &[T] {
        &self.phis
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> (T, T) {
        let np = self.phis.len();
        (self.thetas[index / np], self.phis[index % np])
    }

    pub fn values(&self) -> Option<&FieldValues<T>> {
        self.values.as_ref()
    }

    pub fn scalars(&self) -> Option<&[T]> {
        match &self.values {
            Some(FieldValues::Scalar(v)) => Some(v),
            _ => None,
        }
    }

    pub fn vectors(&self) -> Option<&[[T; 3]]> {
        match &self.values {
            Some(FieldValues::Vector(v)) => Some(v),
            _ => None,
        }
    }

    pub fn scalar_at(&self, i_theta: usize, i_phi: usize) -> Option<T> {
        self.scalars().map(|v| v[i_theta * self.phis.len() + i_phi])
    }

    /// `int f dOmega` of a scalar field: trapezoid in `theta`, periodic sum in
    /// `phi`.
    pub fn integrate(&self) -> Option<T> {
        let v = self.scalars()?;
        let np = self.phis.len();
        let nt = self.thetas.len();
        let dtheta = T::pi() / T::of((nt - 1) as f64);
        let dphi = T::two_pi() / T::of(np as f64);
        let mut total = T::zero();
        for (i, &theta) in self.thetas.iter().enumerate() {
            let edge = if i == 0 || i == nt - 1 {
                T::of(0.5)
            } else {
                T::one()
            };
            let ring = v[i * np..(i + 1) * np]
                .iter()
                .fold(T::zero(), |acc, &x| acc + x);
            total += edge * theta.sin() * ring;
        }
        Some(total * dtheta * dphi)
    }

    fn with_values(&self, values: FieldValues<T>) -> Self {
        SphereGrid {
            thetas: self.thetas.clone(),
            phis: self.phis.clone(),
            values: Some(values),
        }
    }

    fn map_nodes<V: Send>(
        &self,
        ops: &SpinOperatorSet<T>,
        f: impl Fn(&StateVector<T>) -> V + Sync,
    ) -> Result<Vec<V>> {
        (0..self.len())
            .into_par_iter()
            .map(|k| {
                let (theta, phi) = self.node(k);
                coherent_state(ops, theta, phi).map(|s| f(&s))
            })
            .collect()
    }
}

fn ensure_finite<T: Real>(values: impl IntoIterator<Item = T>) -> Result<()> {
    if values.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: "non-finite value".into(),
        });
    }
    Ok(())
}

/// `Q(theta, phi) = |<theta, phi|psi>|^2`.
pub fn q_function<T: Real>(
    ops: &SpinOperatorSet<T>,
    psi: &StateVector<T>,
    grid: &SphereGrid<T>,
) -> Result<SphereGrid<T>> {
    if psi.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: psi.dim(),
        });
    }
    let values = grid.map_nodes(ops, |c| c.inner(psi).modulus_squared())?;
    ensure_finite(values.iter().copied())?;
    Ok(grid.with_values(FieldValues::Scalar(values)))
}

/// `<theta, phi|H|theta, phi>`.
pub fn expectation_field<T: Real>(
    ops: &SpinOperatorSet<T>,
    h: &CMatrix<T>,
    grid: &SphereGrid<T>,
) -> Result<SphereGrid<T>> {
    check_operator(ops, h)?;
    let values = grid.map_nodes(ops, |c| c.expect(h))?;
    ensure_finite(values.iter().copied())?;
    Ok(grid.with_values(FieldValues::Scalar(values)))
}

/// `d<J>/dt = i<[H, J]>` evaluated in coherent states.
pub fn torque_field<T: Real>(
    ops: &SpinOperatorSet<T>,
    h: &CMatrix<T>,
    grid: &SphereGrid<T>,
) -> Result<SphereGrid<T>> {
    check_operator(ops, h)?;
    let gens = [
        commutator(h, ops.jx()),
        commutator(h, ops.jy()),
        commutator(h, ops.jz()),
    ];
    let i = Complex::new(T::zero(), T::one());
    let values = grid.map_nodes(ops, |c| {
        let a = c.amplitudes();
        let mut v = [T::zero(); 3];
        for (slot, g) in v.iter_mut().zip(&gens) {
            *slot = (i * expectation(g, a)).re;
        }
        v
    })?;
    ensure_finite(values.iter().flatten().copied())?;
    Ok(grid.with_values(FieldValues::Vector(values)))
}

fn check_operator<T: Real>(ops: &SpinOperatorSet<T>, h: &CMatrix<T>) -> Result<()> {
    if h.nrows() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: h.nrows(),
        });
    }
    ensure_hermitian(h, T::structural_tol())
}
