//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};
use num_traits::Zero;

use crate::{Error, Real, Result};

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// `exp(i x)`.
#[inline]
pub(crate) fn cis<T: Real>(x: T) -> Complex<T> {
    Complex::new(x.cos(), x.sin())
}

#[inline]
pub(crate) fn im<T: Real>(x: T) -> Complex<T> {
    Complex::new(T::zero(), x)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn anticommutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b + b * a
}

pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

/// Largest entrywise deviation `max |M - M^H|`.
pub fn hermiticity_defect<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            worst = worst.max(d);
        }
    }
    worst
}

pub(crate) fn ensure_square<T: Real>(m: &CMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

/// Rejects matrices whose hermiticity defect exceeds `tol * max(1, max|M|)`.
pub(crate) fn ensure_hermitian<T: Real>(m: &CMatrix<T>, tol: T) -> Result<()> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > tol * T::one().max(max_abs(m)) {
        return Err(Error::NotHermitian {
            defect: defect.as_f64(),
        });
    }
    Ok(())
}

/// `<psi|M|psi>`.
pub fn expectation<T: Real>(m: &CMatrix<T>, psi: &CVector<T>) -> Complex<T> {
    psi.dotc(&(m * psi))
}

/// Spectral decomposition of a Hermitian matrix with eigenvalues ascending.
///
/// Each eigenvector is rotated so its largest-magnitude component is real and
/// positive.
pub fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = h.nrows();
    let (values, vectors) = if h.iter().all(|z| z.im == T::zero()) {
        // real symmetric input: the real solver is several times cheaper
        let eig = SymmetricEigen::new(h.map(|z| z.re));
        (eig.eigenvalues, eig.eigenvectors.map(re))
    } else {
        let eig = SymmetricEigen::new(h.clone());
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let energies = order.iter().map(|&k| values[k]).collect();
    let mut states = CMatrix::<T>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = vectors.column(k);
        let mut lead = Complex::zero();
        let mut lead_mod = T::zero();
        for z in v.iter() {
            // ties keep the first (lowest-m) entry
            if z.modulus() > lead_mod * (T::one() + T::of(1e-12)) {
                lead_mod = z.modulus();
                lead = *z;
            }
        }
        let phase = if lead_mod > T::zero() {
            lead.conj().unscale(lead_mod)
        } else {
            re(T::one())
        };
        let norm = v.norm();
        for (row, z) in v.iter().enumerate() {
            states[(row, col)] = (*z * phase).unscale(norm);
        }
    }
    (energies, states)
}

/// `exp(i * coeff * H)` for Hermitian `H`.
pub fn exp_i_hermitian<T: Real>(h: &CMatrix<T>, coeff: T) -> CMatrix<T> {
    let (energies, states) = hermitian_eigen(h);
    let phases: Vec<Complex<T>> = energies.iter().map(|&e| cis(coeff * e)).collect();
    let mut scaled = states.clone();
    for (col, p) in phases.iter().enumerate() {
        for z in scaled.column_mut(col).iter_mut() {
            *z *= *p;
        }
    }
    scaled * states.adjoint()
}

/// `exp(i * coeff * H) psi` without forming the full unitary.
pub fn apply_exp_i_hermitian<T: Real>(h: &CMatrix<T>, coeff: T, psi: &CVector<T>) -> CVector<T> {
    let (energies, states) = hermitian_eigen(h);
    let mut coords = states.adjoint() * psi;
    for (k, &e) in energies.iter().enumerate() {
        coords[k] *= cis(coeff * e);
    }
    states * coords
}

/// Phase-invariant distance `sqrt(1 - |tr(U^H V)| / dim)` between unitaries.
///
/// Evaluated as `|W e^{-i phi} - I|_F / sqrt(2 dim)` with `W = U^H V` and
/// `phi = arg tr W`, which equals the trace form but keeps full relative
/// precision when the two unitaries are close.
pub fn phase_invariant_distance<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    let n = u.nrows();
    let w = u.adjoint() * v;
    let tr = w.trace();
    let unit = if tr.modulus() > T::zero() {
        tr.unscale(tr.modulus()).conj()
    } else {
        Complex::new(T::one(), T::zero())
    };
    let defect = w * unit - CMatrix::<T>::identity(n, n);
    let two_dim = T::from_usize(2 * n).unwrap_or_else(T::one);
    (defect.norm_squared() / two_dim).sqrt()
}

/// `max |U^H U - I|` entrywise.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::<T>::identity(n, n)))
}
