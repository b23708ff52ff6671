//! Full-scale dry run of every acceptance configuration; prints measured
//! values against their target bands so tolerances can be sanity-checked
//! before a release.

use ia_csit::channel::SystemDims;
use ia_csit::config::*;
use ia_csit::experiment::run_experiment;
use ia_csit::rate::dof_slope;
use std::time::Instant;

fn base(csit: CsitMode, receiver: Receiver, grid: Vec<f64>, trials: usize) -> SimConfig {
    SimConfig {
        dims: SystemDims::new(3, 5, 3, 2),
        snr_grid_db: grid,
        trials,
        seed: 42,
        csit_mode: csit,
        precoder_mode: PrecoderMode::Subspace,
        receiver,
        bits_mode: BitsMode::Scaled,
        scenario: Scenario::I,
        solver: SolverKnobs::default(),
        ball_volume: BallVolume::default(),
    }
}

fn main() {
    let t0 = Instant::now();

    // Criterion 1: perfect CSI vs published curve, MMSE receiver.
    let cfg = base(CsitMode::Perfect, Receiver::Mmse, vec![0.0, 5.0, 10.0, 15.0], 500);
    let r = run_experiment(&cfg).unwrap();
    let targets = [5.7829, 10.6166, 17.2227, 25.2484];
    for (p, t) in r.points.iter().zip(targets) {
        println!(
            "C1 perfect mmse {:>2} dB: {:7.4} target {:7.4} ratio {:.3} stderr {:.3}",
            p.snr_db,
            p.sum_rate_mean,
            t,
            p.sum_rate_mean / t,
            p.sum_rate_stderr
        );
    }
    println!("-- {:.0}s", t0.elapsed().as_secs_f64());

    // Criterion 2: quantized curves at 40 dB, vectorized precoders, MMSE.
    let grid: Vec<f64> = (0..=8).map(|i| 5.0 * i as f64).collect();
    let mut results = Vec::new();
    for (label, csit, nb, nc, target) in [
        ("proposed(10,12)", CsitMode::Rvq, 10, 12, 18.2921),
        ("proposed(5,6)", CsitMode::Rvq, 5, 6, 15.2821),
        ("nc_cgq(10,12)", CsitMode::NcCgq, 10, 12, 8.4840),
        ("nc_cgq(5,6)", CsitMode::NcCgq, 5, 6, 8.1397),
    ] {
        let mut cfg = base(csit, Receiver::Mmse, grid.clone(), 500);
        cfg.precoder_mode = PrecoderMode::Vectorized;
        cfg.bits_mode = BitsMode::Fixed { n_b: nb, n_c: nc };
        let r = run_experiment(&cfg).unwrap();
        let at40 = r.points.last().unwrap();
        println!(
            "C2 {label:16} 40 dB: {:7.4} target {:7.4} ratio {:.3} stderr {:.3}",
            at40.sum_rate_mean,
            target,
            at40.sum_rate_mean / target,
            at40.sum_rate_stderr
        );
        results.push((label, r));
    }
    // Ordering proposed > nc_cgq at every grid point.
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        let ok = results[a]
            .1
            .points
            .iter()
            .zip(&results[b].1.points)
            .all(|(x, y)| x.sum_rate_mean > y.sum_rate_mean);
        println!("C2 ordering {} > {}: {}", results[a].0, results[b].0, ok);
    }
    println!("-- {:.0}s", t0.elapsed().as_secs_f64());

    // Criterion 4 (fixed-bits flat slope) reuses the proposed(10,12) curve.
    let slope_sat = dof_slope(&results[0].1.rate_points(), (30.0, 40.0)).unwrap();
    println!("C4 fixed-bits slope 30-40 dB: {slope_sat:.3} (need <= 0.5)");

    // Criterion 3: RVQ vs perturbation at 40 dB, subspace mode, projection.
    let mut cfg = base(CsitMode::Rvq, Receiver::Projection, vec![40.0], 150);
    cfg.bits_mode = BitsMode::Fixed { n_b: 15, n_c: 18 };
    let t = Instant::now();
    let rvq = run_experiment(&cfg).unwrap();
    let rvq40 = rvq.points[0].sum_rate_mean;
    println!(
        "C3 rvq(15,18) 40 dB: {:7.4} target 18.1197 ratio {:.3} stderr {:.3} ({:.0}s)",
        rvq40,
        rvq40 / 18.1197,
        rvq.points[0].sum_rate_stderr,
        t.elapsed().as_secs_f64()
    );
    let mut cfg = base(CsitMode::Perturbation, Receiver::Projection, vec![40.0], 500);
    cfg.bits_mode = BitsMode::Fixed { n_b: 15, n_c: 18 };
    let pert = run_experiment(&cfg).unwrap();
    let pert40 = pert.points[0].sum_rate_mean;
    println!(
        "C3 pert(15,18) 40 dB: {:7.4} target 17.5654 ratio {:.3} stderr {:.3}",
        pert40,
        pert40 / 17.5654,
        pert.points[0].sum_rate_stderr
    );
    println!("C3 pert/rvq ratio: {:.4} (need in [0.90, 1.05])", pert40 / rvq40);
    println!("-- {:.0}s", t0.elapsed().as_secs_f64());

    // Criterion 4: scaled-bits DoF slope, perturbation mode, projection.
    let a_grid: Vec<f64> = (10..=13).map(|a| 10.0 * (2f64).powi(a).log10()).collect();
    let cfg = base(CsitMode::Perturbation, Receiver::Projection, a_grid, 300);
    let r = run_experiment(&cfg).unwrap();
    for p in &r.points {
        println!(
            "C4 scaled {:6.2} dB (Nb={}, Nc={}): {:7.3}",
            p.snr_db, p.n_b, p.n_c, p.sum_rate_mean
        );
    }
    let slope = dof_slope(&r.rate_points(), (30.0, 40.0)).unwrap();
    println!("C4 scaled slope: {slope:.3} (need >= 5.1)");
    println!("-- {:.0}s", t0.elapsed().as_secs_f64());

    // Criterion 5: leakage flatness across the power grid, scaled bits.
    let cfg = base(
        CsitMode::Perturbation,
        Receiver::Projection,
        vec![0.0, 10.0, 20.0, 30.0, 40.0],
        300,
    );
    let r = run_experiment(&cfg).unwrap();
    let medians: Vec<f64> = (0..r.points.len())
        .map(|i| r.median_leakage(i).unwrap())
        .collect();
    for (p, m) in r.points.iter().zip(&medians) {
        println!(
            "C5 {:>2} dB (Nb={:>3}, Nc={:>3}): median leakage {:.4}",
            p.snr_db, p.n_b, p.n_c, m
        );
    }
    let ratio = medians.iter().cloned().fold(f64::MIN, f64::max)
        / medians.iter().cloned().fold(f64::MAX, f64::min);
    println!("C5 max/min median leakage: {ratio:.3} (need < 2)");
    println!("-- total {:.0}s", t0.elapsed().as_secs_f64());
}
