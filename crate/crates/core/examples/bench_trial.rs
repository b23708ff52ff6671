//! Per-trial cost of each CSIT mode at desk scale.

use ia_csit::channel::SystemDims;
use ia_csit::config::*;
use ia_csit::experiment::run_experiment;
use std::time::Instant;

fn main() {
    let base = SimConfig {
        dims: SystemDims::new(3, 5, 3, 2),
        snr_grid_db: vec![10.0],
        trials: 100,
        seed: 1,
        csit_mode: CsitMode::Perfect,
        precoder_mode: PrecoderMode::Subspace,
        receiver: Receiver::Projection,
        bits_mode: BitsMode::Fixed { n_b: 10, n_c: 12 },
        scenario: Scenario::I,
        solver: SolverKnobs::default(),
        ball_volume: BallVolume {
            csi: Some(0.99),
            precoder: Some(0.21),
            ..Default::default()
        },
    };
    for (label, mode, bits) in [
        ("perfect", CsitMode::Perfect, (10, 12)),
        ("rvq(10,12)", CsitMode::Rvq, (10, 12)),
        ("rvq(15,18)", CsitMode::Rvq, (15, 18)),
        ("perturbation", CsitMode::Perturbation, (15, 18)),
        ("nc_cgq(10,12)", CsitMode::NcCgq, (10, 12)),
    ] {
        let mut cfg = base.clone();
        cfg.csit_mode = mode;
        cfg.bits_mode = BitsMode::Fixed {
            n_b: bits.0,
            n_c: bits.1,
        };
        if mode == CsitMode::NcCgq {
            cfg.precoder_mode = PrecoderMode::Vectorized;
        }
        let t = Instant::now();
        let r = run_experiment(&cfg).unwrap();
        let dt = t.elapsed().as_secs_f64();
        println!(
            "{label:14} {:7.1} ms/trial   mean rate {:.3}",
            dt * 1000.0 / cfg.trials as f64,
            r.points[0].sum_rate_mean
        );
    }
}
