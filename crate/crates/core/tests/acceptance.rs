//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use cdspin::blochfield::{torque_field, SphereGrid, DEFAULT_PHIS, DEFAULT_THETAS};
use cdspin::calibration::{calibrate_omega, CalibrationSettings};
use cdspin::counterdiabatic::averaged_alpha_table;
use cdspin::linalg::{commutator, max_abs};
use cdspin::propagator::{evolve, jz_distribution, CompensationMode, DEFAULT_STEPS};
use cdspin::schedule::{DriveSchedule, HamiltonianAssembly, StartAxis};
use cdspin::seqcompile::{build_l1_split, build_l2_triple, commutator_cycle, halving_order};
use cdspin::spinops::{compensator_basis, make_spin_ops};
use cdspin::{Projection, Trajectory};
use nalgebra::Complex;

const N: usize = 30;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn within_factor(value: f64, target: f64, factor: f64) -> bool {
    value > 0.0 && value <= target * factor && value >= target / factor
}

fn schedule(omega: f64, n: Projection, start: StartAxis) -> DriveSchedule<f64> {
    DriveSchedule::new(2.0, omega, 1.0, n, start).unwrap()
}

fn run(n_atoms: usize, s: &DriveSchedule<f64>, mode: &CompensationMode<f64>) -> Trajectory {
    let asm = HamiltonianAssembly::new(make_spin_ops(n_atoms).unwrap(), s).unwrap();
    evolve(&asm, s, mode, DEFAULT_STEPS).unwrap()
}

fn ladder_and_exact(omega: f64) -> Vec<Outcome> {
    let s = schedule(omega, Projection::ZERO, StartAxis::Equatorial);
    let exact = run(N, &s, &CompensationMode::ExactHB);
    let worst = 1.0 - exact.worst_fidelity();
    let mut out = vec![Outcome {
        id: "1 exact compensation",
        pass: worst <= 1e-6,
        detail: format!("max_t 1-F = {worst:.3e} (limit 1e-6)"),
    }];

    let runs: Vec<Trajectory> = (0..=4)
        .map(|k| {
            let mode = if k == 0 {
                CompensationMode::None
            } else {
                CompensationMode::partial(k)
            };
            run(N, &s, &mode)
        })
        .collect();
    let f: Vec<f64> = runs.iter().map(|r| r.final_fidelity()).collect();
    let db: Vec<f64> = runs.iter().map(|r| r.final_squeezing_db()).collect();

    let p2 = (f[1] - 0.91).abs() <= 0.03
        && (f[2] - 0.983).abs() <= 0.03
        && within_factor(1.0 - f[3], 8e-6, 10.0)
        && within_factor(1.0 - f[4], 2e-7, 10.0);
    out.push(Outcome {
        id: "2 partial fidelities",
        pass: p2,
        detail: format!(
            "F(L1)={:.4} F(L1-2)={:.4} 1-F(L1-3)={:.3e} 1-F(L1-4)={:.3e}",
            f[1],
            f[2],
            1.0 - f[3],
            1.0 - f[4]
        ),
    });

    let want = [-1.6, -10.8, -14.2, -51.0, -65.0];
    let tol = [1.5, 1.5, 1.5, 10.0, 10.0];
    let p3 = (0..5).all(|k| (db[k] - want[k]).abs() <= tol[k]);
    out.push(Outcome {
        id: "3 squeezing ladder",
        pass: p3,
        detail: format!(
            "dB = [{}] vs [-1.6, -10.8, -14.2, -51, -65]",
            db.iter()
                .map(|d| format!("{d:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    });

    let p4 = f.windows(2).all(|w| w[1] > w[0]) && db.windows(2).all(|w| w[1] < w[0]);
    out.push(Outcome {
        id: "4 monotone ordering",
        pass: p4,
        detail: format!(
            "F = [{}]",
            f.iter()
                .map(|x| format!("{x:.10}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    });

    // the four-operator state should sit almost entirely at m = 0
    let mass = jz_distribution(runs[4].final_state())[N / 2];
    println!("      info: four-operator final P(m=0) = {mass:.9}");
    out
}

fn general_dicke(omega: f64) -> Outcome {
    let n = Projection::integer(5);
    let fid = |start, k| {
        let s = schedule(omega, n, start);
        run(N, &s, &CompensationMode::partial(k)).final_fidelity()
    };
    let a: Vec<f64> = (1..=4).map(|k| fid(StartAxis::Equatorial, k)).collect();
    let b: Vec<f64> = (1..=4)
        .map(|k| fid(StartAxis::MatchedLatitude, k))
        .collect();
    let crossover = b[0] > a[0] && b[1] > a[1] && a[2] > b[2] && a[3] > b[3];
    Outcome {
        id: "5 general Dicke n=5",
        pass: (a[2] - 0.9998).abs() <= 0.0005 && (b[1] - 0.982).abs() <= 0.01 && crossover,
        detail: format!(
            "(a) F(K=3)={:.5}, (b) F(K=2)={:.4}; 1-F (a) K=1..4 [{}], (b) [{}]",
            a[2],
            b[1],
            a.iter()
                .map(|x| format!("{:.2e}", 1.0 - x))
                .collect::<Vec<_>>()
                .join(", "),
            b.iter()
                .map(|x| format!("{:.2e}", 1.0 - x))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn cost_weighted(omega: f64) -> Outcome {
    let s = schedule(omega, Projection::ZERO, StartAxis::Equatorial);
    let mode = CompensationMode::Partial {
        count: 4,
        costs: vec![0.0, 3.0, 500.0, 1e5],
    };
    let tr = run(N, &s, &mode);
    let peaks = tr.alpha_peaks();
    let want = [1.4e-1, 9.3e-3, 3.1e-3, 8.8e-4];
    let peaks_ok = peaks
        .iter()
        .zip(want)
        .all(|(p, w)| (p - w).abs() <= 0.3 * w);
    let infid = 1.0 - tr.final_fidelity();
    let db = tr.final_squeezing_db();
    Outcome {
        id: "6 cost-weighted solve",
        pass: peaks_ok && within_factor(infid, 5.2e-3, 3.0) && (db + 19.7).abs() <= 3.0,
        detail: format!(
            "max|alpha| = [{}], 1-F = {infid:.3e}, {db:.2} dB",
            peaks
                .iter()
                .map(|p| format!("{p:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn fluctuating(omega: f64) -> Outcome {
    let steps = 2000;
    let s = schedule(omega, Projection::ZERO, StartAxis::Equatorial);
    let support: Vec<(usize, f64)> = (50..=70).map(|n| (n, 1.0 / 21.0)).collect();
    let table = averaged_alpha_table(&support, &s, 4, &[0.0; 4], steps).unwrap();
    let mode = CompensationMode::AveragedAlphas(table.clone());
    let mut values = Vec::new();
    for n_atoms in (50..=70).step_by(2) {
        let asm = HamiltonianAssembly::new_any_parity(make_spin_ops(n_atoms).unwrap(), &s).unwrap();
        let tr = evolve(&asm, &s, &mode, steps).unwrap();
        values.push((n_atoms, tr.final_squeezing_db()));
    }
    let inside = values
        .iter()
        .filter(|(_, db)| (db + 10.0).abs() <= 2.0)
        .count();
    Outcome {
        id: "7 fluctuating N",
        pass: inside * 5 >= values.len() * 4,
        detail: format!(
            "{inside}/{} even N within -10 +/- 2 dB; dB by N: {}; dropped degenerate entries {}, mixed parity {}",
            values.len(),
            values.iter().map(|(n, d)| format!("{n}:{d:.1}")).collect::<Vec<_>>().join(" "),
            table.dropped,
            table.mixed_parity
        ),
    }
}

fn identities() -> Outcome {
    let mut worst = 0.0f64;
    for n_atoms in 1..=16 {
        let o = make_spin_ops::<f64>(n_atoms).unwrap();
        let l = compensator_basis(&o, Projection::from_twice((n_atoms % 2) as i64), 4).unwrap();
        // the unshifted operators are what the identities are about
        let l = if n_atoms % 2 == 0 {
            l.operators().to_vec()
        } else {
            common::basis(&common::spin(n_atoms), 0.0)
        };
        let z2 = o.jz() * o.jz();
        let x2 = o.jx() * o.jx();
        let y2 = o.jy() * o.jy();
        let i = Complex::new(0.0, 1.0);
        let h = Complex::new(0.0, 0.5);
        let scale = max_abs(&l[3]).max(1.0);
        let checks = [
            max_abs(&(commutator(o.jx(), &z2) * i - &l[0])),
            max_abs(&(commutator(&x2, &z2) * h - &l[1])),
            max_abs(&(commutator(&z2, &y2) * h - &l[1])),
            max_abs(&(commutator(&y2, &x2) * h - &l[1])),
            max_abs(
                &(commutator(&z2, &commutator(&z2, &l[0])) * Complex::new(0.25, 0.0)
                    + &l[0] * Complex::new(0.75, 0.0)
                    - &l[2]),
            ) / scale,
            max_abs(
                &(commutator(&z2, &commutator(&z2, &l[1])) * Complex::new(1.0 / 16.0, 0.0)
                    + &l[1] * Complex::new(3.0, 0.0)
                    - &l[3]),
            ) / scale,
        ];
        worst = checks.iter().fold(worst, |a, &b| a.max(b));
    }
    Outcome {
        id: "8 operator identities",
        pass: worst <= 1e-10,
        detail: format!("worst entrywise defect over N <= 16: {worst:.2e}"),
    }
}

fn sequence_scaling() -> Outcome {
    let o = make_spin_ops::<f64>(6).unwrap();
    let z2 = o.jz() * o.jz();
    let cycle = halving_order(|dt| commutator_cycle(o.jx(), &z2, dt), 0.01).unwrap();
    let split = halving_order(|dt| build_l1_split(1.0, dt, &o), 0.01).unwrap();
    let triple = halving_order(|dt| build_l2_triple(1.0, dt, &o), 0.02).unwrap();
    Outcome {
        id: "9 sequence scaling",
        pass: (cycle - 3.0).abs() <= 0.3
            && (split - 2.0).abs() <= 0.3
            && (triple - 3.0).abs() <= 0.3,
        detail: format!("orders: cycle {cycle:.3}, L1 split {split:.3}, L2 triple {triple:.3}"),
    }
}

fn oracle_equivalence() -> Outcome {
    let steps = DEFAULT_STEPS;
    let omega = 1.0;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n_atoms in 2..=6usize {
        let twice = (n_atoms % 2) as i64;
        for (twice_n, start) in [
            (twice, StartAxis::Equatorial),
            (twice + 2, StartAxis::Equatorial),
            (twice + 2, StartAxis::MatchedLatitude),
        ] {
            let n = Projection::from_twice(twice_n);
            let s = DriveSchedule::new(2.0, omega, 1.0, n, start).unwrap();
            let setup = common::Setup {
                n_atoms,
                n: n.value(),
                omega,
                chi: 1.0,
                duration: 2.0,
                matched: start == StartAxis::MatchedLatitude,
            };
            let kmax = 4.min(n_atoms);
            let mut modes = vec![
                (CompensationMode::None, common::Mode::None),
                (CompensationMode::ExactHB, common::Mode::Ground),
            ];
            for k in 1..=kmax {
                modes.push((
                    CompensationMode::partial(k),
                    common::Mode::Partial(vec![0.0; k]),
                ));
            }
            let costs = vec![0.0, 0.5, 2.0, 10.0][..kmax].to_vec();
            modes.push((
                CompensationMode::Partial {
                    count: kmax,
                    costs: costs.clone(),
                },
                common::Mode::Partial(costs),
            ));
            if start == StartAxis::Equatorial && twice == 0 {
                let support = vec![(n_atoms, 0.5), (n_atoms + 2, 0.5)];
                let table = averaged_alpha_table(&support, &s, 2, &[0.0, 0.0], steps).unwrap();
                modes.push((
                    CompensationMode::AveragedAlphas(table),
                    common::Mode::Averaged(support, vec![0.0, 0.0]),
                ));
            }
            let asm = HamiltonianAssembly::new(make_spin_ops(n_atoms).unwrap(), &s).unwrap();
            for (mode, oracle_mode) in modes {
                let tr = evolve(&asm, &s, &mode, steps).unwrap();
                let reference = common::final_state(&setup, &oracle_mode, 10 * steps);
                let overlap = tr.final_state().amplitudes().dotc(&reference).norm_sqr();
                if 1.0 - overlap > 1e-8 {
                    println!(
                        "      info: N={n_atoms} n={n} {start:?} {} overlap deficit {:.3e}",
                        mode.label(),
                        1.0 - overlap
                    );
                }
                worst = worst.max(1.0 - overlap);
                cases += 1;
            }
        }
    }
    Outcome {
        id: "10 oracle equivalence",
        pass: worst <= 1e-8,
        detail: format!("{cases} trajectories, worst 1-overlap {worst:.3e} (limit 1e-8)"),
    }
}

fn torque_pattern() -> Outcome {
    let o = make_spin_ops::<f64>(N).unwrap();
    let l1 = compensator_basis(&o, Projection::ZERO, 1)
        .unwrap()
        .operators()[0]
        .clone();
    // an odd theta count puts a row on the equator; the default grid has none
    let mut checked = 0;
    let mut wrong = 0;
    for (n_theta, n_phi) in [
        (DEFAULT_THETAS + 1, DEFAULT_PHIS),
        (DEFAULT_THETAS, DEFAULT_PHIS),
    ] {
        let grid = SphereGrid::uniform(n_theta, n_phi).unwrap();
        let field = torque_field(&o, &l1, &grid).unwrap();
        let v = field.vectors().unwrap();
        for (k, vk) in v.iter().enumerate() {
            let (theta, phi) = grid.node(k);
            if (theta - PI / 2.0).abs() > PI / (n_theta - 1) as f64 * 0.51 || phi.sin().abs() < 1e-9
            {
                continue;
            }
            let (x, y) = (phi.cos(), phi.sin());
            let east = x * vk[1] - y * vk[0];
            checked += 1;
            let expect_east = phi < PI;
            if (east > 0.0) != expect_east {
                wrong += 1;
            }
        }
    }
    Outcome {
        id: "11 torque sign pattern",
        pass: wrong == 0 && checked > 0,
        detail: format!("{checked} equatorial nodes, {wrong} against east/west pattern"),
    }
}

/// `ACCEPTANCE_ONLY=8,9` restricts the run to the listed criteria.
fn selected(id: u32) -> bool {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').any(|x| x.trim().parse() == Ok(id)),
        Err(_) => true,
    }
}

fn main() {
    let clock = Instant::now();
    let mut outcomes = Vec::new();
    if (1..=7).any(selected) {
        let template = schedule(1.0, Projection::ZERO, StartAxis::Equatorial);
        let cal = calibrate_omega(N, &template, &CalibrationSettings::default()).unwrap();
        println!(
            "calibration: omega_max = {:.6} chi_max (F = {:.5}, refined = {}, {} evaluations)",
            cal.omega_max,
            cal.fidelity,
            cal.refined,
            cal.evaluated.len()
        );
        let omega = cal.omega_max;
        if (1..=4).any(selected) {
            outcomes.extend(ladder_and_exact(omega));
        }
        if selected(5) {
            outcomes.push(general_dicke(omega));
        }
        if selected(6) {
            outcomes.push(cost_weighted(omega));
        }
        if selected(7) {
            outcomes.push(fluctuating(omega));
        }
    }
    if selected(8) {
        outcomes.push(identities());
    }
    if selected(9) {
        outcomes.push(sequence_scaling());
    }
    if selected(10) {
        outcomes.push(oracle_equivalence());
    }
    if selected(11) {
        outcomes.push(torque_pattern());
    }

    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{} criterion {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.0} s)",
        outcomes.len() - failed,
        clock.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
