//! Pulse sequences of linear and quadratic generators that emulate the
//! compensating operators.
//!
//! A segment with generator `G` and coefficient `c` contributes
//! `exp(i c G)`; segments are stored in time order, so the sequence unitary
//! is `exp(i c_last G_last) ... exp(i c_1 G_1)`. A sequence emulates
//! `exp(i s tau X)` where `X` is the target, `s` the effective strength and
//! `tau` the interval. Casimir terms only add a global phase, so all
//! comparisons use the phase-invariant distance.

use serde::Serialize;

use crate::linalg::{
    commutator, ensure_hermitian, exp_i_hermitian, im, max_abs, phase_invariant_distance, re,
    CMatrix,
};
use crate::spinops::{compensator_basis, SpinOperatorSet};
use crate::{Error, Projection, Real, Result};

/// `(a . J)^power` for a unit axis `a`, or an arbitrary matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorLabel {
    Axis {
        name: String,
        axis: [f64; 3],
        power: u32,
    },
    Custom {
        name: String,
    },
}

impl GeneratorLabel {
    pub fn axis(name: &str, axis: [f64; 3], power: u32) -> Self {
        GeneratorLabel::Axis {
            name: name.into(),
            axis,
            power,
        }
    }

    pub fn custom(name: &str) -> Self {
        GeneratorLabel::Custom { name: name.into() }
    }

    pub fn power(&self) -> Option<u32> {
        match self {
            GeneratorLabel::Axis { power, .. } => Some(*power),
            GeneratorLabel::Custom { .. } => None,
        }
    }
}

impl std::fmt::Display for GeneratorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneratorLabel::Axis { name, power: 1, .. } => write!(f, "J{name}"),
            GeneratorLabel::Axis { name, power, .. } => write!(f, "J{name}^{power}"),
            GeneratorLabel::Custom { name } => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Segment<T: Real> {
    pub label: GeneratorLabel,
    pub generator: CMatrix<T>,
    pub coefficient: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Commutator,
    L1,
    L2,
    L3,
    L4,
}

#[derive(Debug, Clone)]
pub struct PulseSequence<T: Real> {
    pub segments: Vec<Segment<T>>,
    pub target: CMatrix<T>,
    pub kind: TargetKind,
    pub effective_strength: T,
    pub interval: T,
    /// Scaling every coefficient by `lambda` scales the emulated phase by
    /// `lambda^degree` at leading order.
    pub degree: u32,
}

impl<T: Real> PulseSequence<T> {
    /// `s tau`, the weight of the target in the emulated exponent.
    pub fn phase(&self) -> T {
        self.effective_strength * self.interval
    }

    /// Expected exponent of the residual under `dt` halving.
    pub fn predicted_order(&self) -> u32 {
        self.degree + 1
    }

    /// True when some quadratic pulse needs the opposite interaction sign.
    pub fn needs_negative_interaction(&self) -> bool {
        self.segments
            .iter()
            .any(|s| s.label.power() == Some(2) && s.coefficient < T::zero())
    }

    /// `exp(i s tau X)`.
    pub fn target_unitary(&self) -> CMatrix<T> {
        exp_i_hermitian(&self.target, self.phase())
    }

    /// The exact inverse: reversed order, negated coefficients.
    pub fn inverse(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                coefficient: -s.coefficient,
                ..s.clone()
            })
            .collect();
        PulseSequence {
            segments,
            effective_strength: -self.effective_strength,
            ..self.clone()
        }
    }

    /// All coefficients multiplied by `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                coefficient: s.coefficient * lambda,
                ..s.clone()
            })
            .collect();
        let mut factor = T::one();
        for _ in 0..self.degree {
            factor *= lambda;
        }
        PulseSequence {
            segments,
            effective_strength: self.effective_strength * factor,
            ..self.clone()
        }
    }

    /// The sequence played `count` times back to back.
    pub fn repeated(&self, count: usize) -> Self {
        let mut segments = Vec::with_capacity(self.segments.len() * count);
        for _ in 0..count {
            segments.extend(self.segments.iter().cloned());
        }
        PulseSequence {
            segments,
            interval: self.interval * T::of(count as f64),
            ..self.clone()
        }
    }

    /// Same phase, reached through `count` repetitions of a shorter base.
    pub fn with_cycles(&self, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                name: "cycles",
                reason: "need at least one cycle".into(),
            });
        }
        let lambda = (T::one() / T::of(count as f64)).powf(T::one() / T::of(self.degree as f64));
        let mut short = self.scaled(lambda);
        short.effective_strength = self.phase() / T::of(count as f64) / self.interval;
        let mut out = short.repeated(count);
        out.interval = self.interval;
        out.effective_strength = self.effective_strength;
        Ok(out)
    }

    /// Rescales (and inverts if needed) so the emulated phase equals `phase`.
    pub fn with_phase(&self, phase: T) -> Result<Self> {
        let own = self.phase();
        if own == T::zero() {
            return Err(Error::InvalidParameter {
                name: "phase",
                reason: "cannot rescale a sequence with zero phase".into(),
            });
        }
        let base = if (phase < T::zero()) == (own < T::zero()) {
            self.clone()
        } else {
            self.inverse()
        };
        let ratio = (phase / base.phase()).abs();
        let lambda = ratio.powf(T::one() / T::of(self.degree as f64));
        Ok(base.scaled(lambda))
    }

    pub fn report(&self) -> Result<SequenceReport> {
        Ok(SequenceReport {
            target: self.kind,
            effective_strength: self.effective_strength.as_f64(),
            interval: self.interval.as_f64(),
            phase: self.phase().as_f64(),
            degree: self.degree,
            needs_negative_interaction: self.needs_negative_interaction(),
            residual: residual(self)?.as_f64(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentReport {
                    generator: s.label.to_string(),
                    label: s.label.clone(),
                    sign: if s.coefficient < T::zero() { -1 } else { 1 },
                    duration: s.coefficient.abs().as_f64(),
                    coefficient: s.coefficient.as_f64(),
                })
                .collect(),
        })
    }
}

/// Serializable description for external pulse programmers.
#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub target: TargetKind,
    pub effective_strength: f64,
    pub interval: f64,
    pub phase: f64,
    pub degree: u32,
    pub needs_negative_interaction: bool,
    pub residual: f64,
    pub segments: Vec<SegmentReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub generator: String,
    pub label: GeneratorLabel,
    pub sign: i8,
    /// `|coefficient|`, the pulse area in units of the generator's unit
    /// strength.
    pub duration: f64,
    pub coefficient: f64,
}

/// Ordered product of the segment exponentials; identity when empty.
pub fn sequence_unitary<T: Real>(seq: &PulseSequence<T>) -> Result<CMatrix<T>> {
    let dim = seq.target.nrows();
    let mut u = CMatrix::<T>::identity(dim, dim);
    for s in &seq.segments {
        if s.generator.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.generator.nrows(),
            });
        }
        ensure_hermitian(&s.generator, T::structural_tol())?;
        u = exp_i_hermitian(&s.generator, s.coefficient) * u;
    }
    Ok(u)
}

/// Phase-invariant distance between the sequence and its target unitary.
pub fn residual<T: Real>(seq: &PulseSequence<T>) -> Result<T> {
    Ok(phase_invariant_distance(
        &sequence_unitary(seq)?,
        &seq.target_unitary(),
    ))
}

/// `log2(r(dt) / r(dt/2))` for a family of sequences.
pub fn halving_order<T: Real>(build: impl Fn(T) -> Result<PulseSequence<T>>, dt: T) -> Result<T> {
    let coarse = residual(&build(dt)?)?;
    let fine = residual(&build(dt / T::of(2.0))?)?;
    Ok((coarse / fine).log2())
}

fn check_step<T: Real>(dt: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be positive and finite".into(),
        });
    }
    Ok(())
}

/// `e^{iA dt} e^{iB dt} e^{-iA dt} e^{-iB dt}`, which approximates
/// `exp(-[A, B] dt^2) = exp(i dt^2 * i[A, B])`.
pub fn commutator_cycle<T: Real>(
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    dt: T,
) -> Result<PulseSequence<T>> {
    commutator_cycle_labeled(
        a,
        GeneratorLabel::custom("A"),
        b,
        GeneratorLabel::custom("B"),
        dt,
    )
}

pub fn commutator_cycle_labeled<T: Real>(
    a: &CMatrix<T>,
    a_label: GeneratorLabel,
    b: &CMatrix<T>,
    b_label: GeneratorLabel,
    dt: T,
) -> Result<PulseSequence<T>> {
    check_step(dt)?;
    ensure_hermitian(a, T::structural_tol())?;
    ensure_hermitian(b, T::structural_tol())?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let seg = |label: &GeneratorLabel, g: &CMatrix<T>, c: T| Segment {
        label: label.clone(),
        generator: g.clone(),
        coefficient: c,
    };
    Ok(PulseSequence {
        segments: vec![
            seg(&b_label, b, -dt),
            seg(&a_label, a, -dt),
            seg(&b_label, b, dt),
            seg(&a_label, a, dt),
        ],
        target: commutator(a, b) * im(T::one()),
        kind: TargetKind::Commutator,
        effective_strength: dt,
        interval: dt,
        degree: 2,
    })
}

fn square<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m * m
}

fn warn_if_coarse<T: Real>(chi: T, dt: T, ops: &SpinOperatorSet<T>) {
    let x = (chi * dt * T::of(ops.n_atoms() as f64)).abs();
    if x > T::of(0.3) {
        eprintln!(
            "warning: chi*dt*N = {} exceeds 0.3; the sequence is far from its small-step limit",
            x.as_f64()
        );
    }
}

fn standard_basis<T: Real>(ops: &SpinOperatorSet<T>) -> Result<Vec<CMatrix<T>>> {
    Ok(compensator_basis(ops, Projection::ZERO, 4)?
        .operators()
        .to_vec())
}

/// `Jx^2` for a third of `dt`, then `((Jy + Jz)/sqrt 2)^2` for two thirds;
/// emulates `(chi/3)(J^2 + L1)` over `dt`.
pub fn build_l1_split<T: Real>(
    chi: T,
    dt: T,
    ops: &SpinOperatorSet<T>,
) -> Result<PulseSequence<T>> {
    check_step(dt)?;
    warn_if_coarse(chi, dt, ops);
    let h = T::of(0.5f64.sqrt());
    let tilted = (ops.jy() + ops.jz()) * re(h);
    let third = chi * dt / T::of(3.0);
    Ok(PulseSequence {
        segments: vec![
            Segment {
                label: GeneratorLabel::axis("x", [1.0, 0.0, 0.0], 2),
                generator: square(ops.jx()),
                coefficient: third,
            },
            Segment {
                label: GeneratorLabel::axis("z'", [0.0, 0.5f64.sqrt(), 0.5f64.sqrt()], 2),
                generator: square(&tilted),
                coefficient: third * T::of(2.0),
            },
        ],
        target: standard_basis(ops)?.swap_remove(0),
        kind: TargetKind::L1,
        effective_strength: chi / T::of(3.0),
        interval: dt,
        degree: 1,
    })
}

/// `Jz^2 -> Jy^2 -> Jx^2`, each for a third of `dt`; emulates
/// `-(chi^2 dt / 9) L2` over `dt`. The reversed order flips the sign.
pub fn build_l2_triple<T: Real>(
    chi: T,
    dt: T,
    ops: &SpinOperatorSet<T>,
) -> Result<PulseSequence<T>> {
    check_step(dt)?;
    warn_if_coarse(chi, dt, ops);
    let a = chi * dt / T::of(3.0);
    let pulse = |name: &str, axis: [f64; 3], j: &CMatrix<T>| Segment {
        label: GeneratorLabel::axis(name, axis, 2),
        generator: square(j),
        coefficient: a,
    };
    Ok(PulseSequence {
        segments: vec![
            pulse("z", [0.0, 0.0, 1.0], ops.jz()),
            pulse("y", [0.0, 1.0, 0.0], ops.jy()),
            pulse("x", [1.0, 0.0, 0.0], ops.jx()),
        ],
        target: standard_basis(ops)?.swap_remove(1),
        kind: TargetKind::L2,
        effective_strength: -chi * chi * dt / T::of(9.0),
        interval: dt,
        degree: 2,
    })
}

/// Group commutator `e^{i a A} U e^{-i a A} U^{-1}` of a `Jz^2` pulse with a
/// sequence `U ~ exp(i p X)`; approximates `exp(i a p * i[A, X])`.
fn conjugation_cycle<T: Real>(
    inner: &PulseSequence<T>,
    a: T,
    ops: &SpinOperatorSet<T>,
) -> PulseSequence<T> {
    let jz2 = square(ops.jz());
    let pulse = |c: T| Segment {
        label: GeneratorLabel::axis("z", [0.0, 0.0, 1.0], 2),
        generator: jz2.clone(),
        coefficient: c,
    };
    let mut segments = inner.inverse().segments;
    segments.push(pulse(-a));
    segments.extend(inner.segments.iter().cloned());
    segments.push(pulse(a));
    let target = commutator(&jz2, &inner.target) * im(T::one());
    PulseSequence {
        segments,
        target,
        kind: inner.kind,
        effective_strength: a * inner.phase() / inner.interval,
        interval: inner.interval,
        degree: inner.degree + 1,
    }
}

/// Nested `Jz^2` conjugation cycles around an `L1` or `L2` sequence plus a
/// rescaled copy of the base, so that the result emulates `L3` or `L4`.
///
/// The conjugating pulses reuse the area of the base's first pulse. With
/// `A = Jz^2` the double cycle yields `exp(-i a^2 p [A, [A, X]])`, and
/// `[A,[A,L1]] = 4 L3 - 3 L1`, `[A,[A,L2]] = 16 L4 - 48 L2`.
pub fn build_l3_l4_nested<T: Real>(
    base: &PulseSequence<T>,
    ops: &SpinOperatorSet<T>,
) -> Result<PulseSequence<T>> {
    let basis = standard_basis(ops)?;
    let jz2 = square(ops.jz());
    let nested = |l: &CMatrix<T>| commutator(&jz2, &commutator(&jz2, l));
    let tol = T::structural_tol();
    let scale = T::one().max(max_abs(&basis[3]));
    let id3 = nested(&basis[0]) * re(T::of(0.25)) + &basis[0] * re(T::of(0.75)) - &basis[2];
    let id4 = nested(&basis[1]) * re(T::of(1.0 / 16.0)) + &basis[1] * re(T::of(3.0)) - &basis[3];
    let identity_defect = max_abs(&id3).max(max_abs(&id4));
    if identity_defect > tol * scale {
        return Err(Error::InvalidParameter {
            name: "operator identities",
            reason: format!(
                "nested commutator identity off by {}",
                identity_defect.as_f64()
            ),
        });
    }

    let close = |m: &CMatrix<T>| max_abs(&(&base.target - m)) <= tol * scale;
    let (kind, target, outer, inner) = if close(&basis[0]) {
        (TargetKind::L3, basis[2].clone(), T::of(4.0), T::of(3.0))
    } else if close(&basis[1]) {
        (TargetKind::L4, basis[3].clone(), T::of(16.0), T::of(48.0))
    } else {
        return Err(Error::UnrecognizedTarget);
    };
    let a = base
        .segments
        .first()
        .map(|s| s.coefficient.abs())
        .ok_or(Error::UnrecognizedTarget)?;
    if !(a > T::zero()) {
        return Err(Error::UnrecognizedTarget);
    }

    let p = base.phase();
    let once = conjugation_cycle(base, a, ops);
    let twice = conjugation_cycle(&once, a, ops);
    // twice ~ exp(-i a^2 p (outer X' - inner X)); cancel the X part
    let correction = base.with_phase(-a * a * p * inner)?;
    let mut segments = twice.segments;
    segments.extend(correction.segments);
    Ok(PulseSequence {
        segments,
        target,
        kind,
        effective_strength: -a * a * p * outer / base.interval,
        interval: base.interval,
        degree: base.degree + 2,
    })
}
