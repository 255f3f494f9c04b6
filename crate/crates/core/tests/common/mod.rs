//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the crate's eigensolver, exponential or operator builders.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};

pub type C = Complex<f64>;
pub type M = DMatrix<C>;
pub type V = DVector<C>;

pub fn c(re: f64) -> C {
    Complex::new(re, 0.0)
}

/// Cyclic Jacobi on a real symmetric matrix; eigenvalues ascending with
/// matching eigenvector columns.
pub fn jacobi_eigh(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-30 * (1.0 + a.norm_squared()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, col| v[(r, order[col])]);
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix through its real `2n x 2n` embedding;
/// each value appears twice there, so every other one is kept.
pub fn hermitian_eigenvalues(h: &M) -> Vec<f64> {
    let n = h.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, col| {
        let z = h[(r % n, col % n)];
        match (r < n, col < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let (vals, _) = jacobi_eigh(&big);
    vals.into_iter().step_by(2).collect()
}

/// `exp(-i dt H)` by scaling and squaring a Taylor series.
pub fn expm_taylor(h: &M, dt: f64) -> M {
    let n = h.nrows();
    let a = h * Complex::new(0.0, -dt);
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.1 {
        scale /= 2.0;
        squarings += 1;
    }
    let a = a * c(scale);
    let mut term = M::identity(n, n);
    let mut sum = M::identity(n, n);
    for k in 1..30 {
        term = &term * &a * c(1.0 / k as f64);
        sum += &term;
        if term.iter().all(|z| z.norm() < 1e-18) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub struct Spin {
    pub jx: M,
    pub jy: M,
    pub jz: M,
}

/// Ladder construction in ascending `m`.
pub fn spin(n_atoms: usize) -> Spin {
    let d = n_atoms + 1;
    let j = n_atoms as f64 / 2.0;
    let mut jp = M::zeros(d, d);
    for k in 0..d - 1 {
        let m = k as f64 - j;
        jp[(k + 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let jz = M::from_fn(
        d,
        d,
        |r, col| if r == col { c(r as f64 - j) } else { c(0.0) },
    );
    Spin {
        jx: (&jp + &jm) * c(0.5),
        jy: (&jp - &jm) * Complex::new(0.0, -0.5),
        jz,
    }
}

/// `L1..L4` with `S = Jz - n`.
pub fn basis(sp: &Spin, n: f64) -> Vec<M> {
    let d = sp.jz.nrows();
    let s = &sp.jz - M::identity(d, d) * c(n);
    let s3 = &s * &s * &s;
    let (x, y) = (&sp.jx, &sp.jy);
    vec![
        &s * y + y * &s,
        &s * y * x + x * y * &s,
        &s3 * y + y * &s3,
        &s3 * y * x + x * y * &s3,
    ]
}

#[derive(Clone, Debug)]
pub struct Setup {
    pub n_atoms: usize,
    pub n: f64,
    pub omega: f64,
    pub chi: f64,
    pub duration: f64,
    pub matched: bool,
}

impl Setup {
    pub fn ramps(&self, t: f64) -> (f64, f64, f64, f64) {
        let w = std::f64::consts::PI / (2.0 * self.duration);
        let (s, co) = (w * t).sin_cos();
        (
            self.omega * co.powi(3),
            self.chi * s.powi(3),
            -3.0 * w * self.omega * co * co * s,
            3.0 * w * self.chi * s * s * co,
        )
    }

    fn parts(&self, sp: &Spin) -> (M, M) {
        let d = self.n_atoms + 1;
        let hc = if self.matched {
            let z = 2.0 * self.n / self.n_atoms as f64;
            (&sp.jx * c((1.0 - z * z).sqrt()) + &sp.jz * c(z)) * c(-1.0)
        } else {
            &sp.jx * c(-1.0)
        };
        let s = &sp.jz - M::identity(d, d) * c(self.n);
        (hc, &s * &s)
    }

    pub fn hamiltonian(&self, sp: &Spin, t: f64) -> M {
        let (ac, an, _, _) = self.ramps(t);
        let (hc, hn) = self.parts(sp);
        hc * c(ac) + hn * c(an)
    }

    /// Ground state of the real symmetric `H(t)`, sign fixed against `reference`
    /// (or by its largest entry when absent).
    pub fn ground(&self, sp: &Spin, t: f64, reference: Option<&V>) -> V {
        let h = self.hamiltonian(sp, t).map(|z| z.re);
        let (_, vecs) = jacobi_eigh(&h);
        let mut g: V = vecs.column(0).map(c);
        let flip = match reference {
            Some(r) => r.dotc(&g).re < 0.0,
            None => {
                let lead =
                    g.iter().copied().fold(
                        c(0.0),
                        |a, z| if z.norm() > a.norm() + 1e-12 { z } else { a },
                    );
                lead.re < 0.0
            }
        };
        if flip {
            g = -g;
        }
        g
    }

    /// `dH/dt` from the analytic ramp derivatives.
    pub fn hamiltonian_rate(&self, sp: &Spin, t: f64) -> M {
        let (_, _, dc, dn) = self.ramps(t);
        let (hc, hn) = self.parts(sp);
        hc * c(dc) + hn * c(dn)
    }

    /// Ground state and its tangent from a full Jacobi decomposition.
    pub fn ground_derivative(&self, sp: &Spin, t: f64) -> (V, V) {
        let h = self.hamiltonian(sp, t).map(|z| z.re);
        let dh = self.hamiltonian_rate(sp, t).map(|z| z.re);
        let (vals, vecs) = jacobi_eigh(&h);
        let g = vecs.column(0).into_owned();
        let mut d = DVector::<f64>::zeros(h.nrows());
        for k in 1..h.nrows() {
            let v = vecs.column(k);
            d += v * (v.dot(&(&dh * &g)) / (vals[0] - vals[k]));
        }
        (g.map(c), d.map(c))
    }

    /// Central difference of the ground state, step `1e-5 T`.
    pub fn ground_derivative_fd(&self, sp: &Spin, t: f64) -> (V, V) {
        let g = self.ground(sp, t, None);
        let h = 1e-5 * self.duration;
        let (lo, hi) = ((t - h).max(0.0), (t + h).min(self.duration));
        let a = self.ground(sp, lo, Some(&g));
        let b = self.ground(sp, hi, Some(&g));
        let d = (b - a) * c(1.0 / (hi - lo));
        (g, d)
    }
}

#[derive(Clone, Debug)]
pub enum Mode {
    None,
    /// `H_B0` built from the finite-difference tangent.
    Ground,
    Partial(Vec<f64>),
    /// Shared coefficients over `(N, weight)` for the setup's `n`.
    Averaged(Vec<(usize, f64)>, Vec<f64>),
}

/// Gram matrix and right side literally from their definitions.
pub fn normal_equations(l: &[M], g: &V, gd: &V) -> (DMatrix<f64>, Vec<f64>) {
    let k = l.len();
    let expect = |m: &M, a: &V, b: &V| a.dotc(&(m * b));
    let a = DMatrix::from_fn(k, k, |i, j| {
        expect(&(&l[i] * &l[j] + &l[j] * &l[i]), g, g).re
    });
    let rhs = (0..k)
        .map(|i| {
            let z = Complex::new(0.0, 1.0) * (expect(&l[i], g, gd) - expect(&l[i], gd, g));
            z.re
        })
        .collect();
    (a, rhs)
}

/// Spectral solve of `(A + diag g) x = b`, shifting the diagonal by
/// `1e-12 tr(A) / K` when the condition number exceeds `1e12`.
pub fn regularized_solve(a: &DMatrix<f64>, costs: &[f64], b: &[f64]) -> Vec<f64> {
    let k = a.nrows();
    let mut m = a.clone();
    for i in 0..k {
        m[(i, i)] += costs[i];
    }
    if b.iter().all(|x| *x == 0.0) {
        return vec![0.0; k];
    }
    let (vals, _) = jacobi_eigh(&m);
    let top = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(vals[0] > 0.0 && top / vals[0] <= 1e12) {
        let shift = 1e-12 * a.trace() / k as f64;
        for i in 0..k {
            m[(i, i)] += shift;
        }
    }
    let (vals, vecs) = jacobi_eigh(&m);
    let mut x = vec![0.0; k];
    for (i, &lam) in vals.iter().enumerate() {
        let proj: f64 = (0..k).map(|r| vecs[(r, i)] * b[r]).sum();
        for r in 0..k {
            x[r] += vecs[(r, i)] * proj / lam;
        }
    }
    x
}

pub fn alphas(setup: &Setup, sp: &Spin, mode: &Mode, t: f64) -> Vec<f64> {
    match mode {
        Mode::None | Mode::Ground => Vec::new(),
        Mode::Partial(costs) => {
            let l = basis(sp, setup.n);
            let (g, gd) = setup.ground_derivative(sp, t);
            let (a, b) = normal_equations(&l[..costs.len()], &g, &gd);
            regularized_solve(&a, costs, &b)
        }
        Mode::Averaged(support, costs) => {
            let k = costs.len();
            let mut a = DMatrix::<f64>::zeros(k, k);
            let mut b = vec![0.0; k];
            let total: f64 = support.iter().map(|s| s.1).sum();
            for &(n_atoms, w) in support {
                let s = Setup {
                    n_atoms,
                    ..setup.clone()
                };
                let sp_n = spin(n_atoms);
                let l = basis(&sp_n, s.n);
                let (g, gd) = s.ground_derivative(&sp_n, t);
                let (an, bn) = normal_equations(&l[..k], &g, &gd);
                a += an * (w / total);
                for i in 0..k {
                    b[i] += bn[i] * w / total;
                }
            }
            regularized_solve(&a, costs, &b)
        }
    }
}

pub fn total_hamiltonian(setup: &Setup, sp: &Spin, mode: &Mode, t: f64) -> M {
    let h = setup.hamiltonian(sp, t);
    match mode {
        Mode::None => h,
        Mode::Ground => {
            let (g, gd) = setup.ground_derivative(sp, t);
            let i = Complex::new(0.0, 1.0);
            h + (&gd * g.adjoint() - &g * gd.adjoint()) * i
        }
        _ => {
            let l = basis(sp, setup.n);
            let mut out = h;
            for (lk, ak) in l.iter().zip(alphas(setup, sp, mode, t)) {
                out += lk * c(ak);
            }
            out
        }
    }
}

/// Midpoint-rule propagation from the ground state of `H(0)`.
pub fn final_state(setup: &Setup, mode: &Mode, steps: usize) -> V {
    let sp = spin(setup.n_atoms);
    let dt = setup.duration / steps as f64;
    let mut psi = setup.ground(&sp, 0.0, None);
    for j in 0..steps {
        let mid = (j as f64 + 0.5) * dt;
        let h = total_hamiltonian(setup, &sp, mode, mid);
        psi = expm_taylor(&h, dt) * psi;
    }
    psi
}
