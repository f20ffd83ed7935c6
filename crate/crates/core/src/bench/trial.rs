//! Monte Carlo trials and sweeps.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bench::config::BenchConfig;
use crate::ccpd::{solve, SolverConfig};
use crate::doa::{doas_from_factors, DoaEstimate};
use crate::geometry::{direction_between, Direction};
use crate::localization::{localize_all, match_targets, TargetMatching};
use crate::scene::{add_noise, sample_rcs, sample_targets, sample_waveforms, simulate, RadarScene};
use crate::{Result, Vec3};

const SCENE_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// Per-stage wall-clock times in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageCpu {
    pub compress_ms: f64,
    pub targets_ms: f64,
    pub jevd_ms: f64,
    pub factors_ms: f64,
    pub doa_ms: f64,
    pub localize_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: usize,
    pub mae_deg: f64,
    pub rmse_lambda: f64,
    /// Solve through localization, milliseconds.
    pub cpu_ms: f64,
    pub stages: StageCpu,
    pub offdiag_residual: f64,
    pub matrices_used: usize,
    pub failed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub snr_db: f64,
    pub mae_deg: f64,
    pub rmse_lambda: f64,
    pub cpu_ms: f64,
    pub offdiag_residual: f64,
    pub failure_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

/// SplitMix64 finalizer, used to spread trial indices over the seed space.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`. It does not depend on the SNR, so every SNR point
/// sees the same scenes and the same unit-power noise draws.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    mix64(mix64(master) ^ index as u64)
}

/// Mean angular error in degrees over all (array, target) pairs, truth index
/// taken from `matching`. `truth[m][t]` is the true DOA of target `t` at
/// array `m`.
pub fn compute_mae(doas: &[Vec<DoaEstimate>], truth: &[Vec<Direction>], matching: &TargetMatching) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (est_m, truth_m) in doas.iter().zip(truth) {
        for (r, est) in est_m.iter().enumerate() {
            let t = &truth_m[matching.assignment[r]];
            let cos = est.direction.vector().dot(t.vector()).clamp(-1.0, 1.0);
            total += cos.acos().to_degrees();
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// Root-mean-square position error, wavelength units.
pub fn compute_rmse(positions: &[Vec3], truth: &[Vec3], matching: &TargetMatching) -> f64 {
    if positions.is_empty() {
        return 0.0;
    }
    let sum: f64 = positions
        .iter()
        .enumerate()
        .map(|(r, p)| (p - truth[matching.assignment[r]]).norm_squared())
        .sum();
    (sum / positions.len() as f64).sqrt()
}

struct Estimate {
    mae_deg: f64,
    rmse_lambda: f64,
    cpu_ms: f64,
    stages: StageCpu,
    offdiag_residual: f64,
    matrices_used: usize,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn estimate(config: &BenchConfig, snr_db: f64, seed: u64) -> Result<Estimate> {
    let transmit = config.transmit_layout()?;
    let receives = config.receive_layouts()?;
    let centers: Vec<Vec3> = receives.iter().map(|l| l.center).collect();
    let sc = &config.scene;

    let mut scene_rng = ChaCha8Rng::seed_from_u64(seed);
    scene_rng.set_stream(SCENE_STREAM);
    let targets = sample_targets(&sc.target_box, sc.targets, &centers, &mut scene_rng)?;
    let waveforms = sample_waveforms(sc.samples, transmit.elements.len(), &mut scene_rng);
    let rcs = sample_rcs(sc.targets, sc.pulses, receives.len(), &mut scene_rng);
    let scene = RadarScene {
        transmit,
        receives,
        targets,
    };
    let clean = simulate(&scene, &waveforms, &rcs)?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(NOISE_STREAM);
    let obs = add_noise(&clean, snr_db, &mut noise_rng)?;

    let solver = SolverConfig {
        rank: sc.targets,
        seed: mix64(seed),
        transmit_elements: Some(scene.transmit.elements.len()),
    };
    let clock = Instant::now();
    let sol = solve(&obs, &scene.receives, &solver)?;
    let doa_clock = Instant::now();
    let doas = sol
        .factors
        .a
        .iter()
        .zip(&scene.receives)
        .enumerate()
        .map(|(m, (a, layout))| doas_from_factors(a, layout, m))
        .collect::<Result<Vec<_>>>()?;
    let doa_time = doa_clock.elapsed();
    let loc_clock = Instant::now();
    let located = localize_all(&doas, &centers)?;
    let loc_time = loc_clock.elapsed();
    let cpu_ms = ms(clock.elapsed());

    let positions: Vec<Vec3> = located.iter().map(|l| l.position).collect();
    let matching = match_targets(&positions, &scene.targets)?;
    let truth_dirs = centers
        .iter()
        .map(|c| scene.targets.iter().map(|t| direction_between(c, t)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;

    let t = &sol.diagnostics.timings;
    Ok(Estimate {
        mae_deg: compute_mae(&doas, &truth_dirs, &matching),
        rmse_lambda: compute_rmse(&positions, &scene.targets, &matching),
        cpu_ms,
        stages: StageCpu {
            compress_ms: ms(t.compress),
            targets_ms: ms(t.targets),
            jevd_ms: ms(t.jevd),
            factors_ms: ms(t.factors),
            doa_ms: ms(doa_time),
            localize_ms: ms(loc_time),
        },
        offdiag_residual: sol.jevd.offdiag_residual,
        matrices_used: sol.diagnostics.targets.len(),
    })
}

/// One end-to-end trial. Errors become a failed record, never a panic.
pub fn run_trial(config: &BenchConfig, snr_db: f64, trial: usize, seed: u64) -> TrialRecord {
    match estimate(config, snr_db, seed) {
        Ok(e) => TrialRecord {
            snr_db,
            trial,
            mae_deg: e.mae_deg,
            rmse_lambda: e.rmse_lambda,
            cpu_ms: e.cpu_ms,
            stages: e.stages,
            offdiag_residual: e.offdiag_residual,
            matrices_used: e.matrices_used,
            failed: !(e.mae_deg.is_finite() && e.rmse_lambda.is_finite()),
            failure: None,
        },
        Err(err) => TrialRecord {
            snr_db,
            trial,
            mae_deg: f64::NAN,
            rmse_lambda: f64::NAN,
            cpu_ms: f64::NAN,
            stages: StageCpu::default(),
            offdiag_residual: f64::NAN,
            matrices_used: 0,
            failed: true,
            failure: Some(err.to_string()),
        },
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Means over non-failed trials of one SNR point.
pub fn aggregate(snr_db: f64, records: &[TrialRecord]) -> AggregateRow {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| !r.failed).collect();
    AggregateRow {
        snr_db,
        mae_deg: mean(ok.iter().map(|r| r.mae_deg)),
        rmse_lambda: mean(ok.iter().map(|r| r.rmse_lambda)),
        cpu_ms: mean(ok.iter().map(|r| r.cpu_ms)),
        offdiag_residual: mean(ok.iter().map(|r| r.offdiag_residual)),
        failure_rate: if records.is_empty() {
            0.0
        } else {
            (records.len() - ok.len()) as f64 / records.len() as f64
        },
        trials: records.len(),
    }
}

/// Every trial at every SNR, run in parallel; records come back ordered by
/// SNR grid position, then trial index.
pub fn run_sweep(config: &BenchConfig) -> SweepResult {
    let jobs: Vec<(usize, usize)> = (0..config.snr_grid.len())
        .flat_map(|s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(s, t)| run_trial(config, config.snr_grid[s], t, trial_seed(config.seed, t)))
        .collect();
    let aggregates = records
        .chunks(config.trials)
        .zip(&config.snr_grid)
        .map(|(chunk, &snr)| aggregate(snr, chunk))
        .collect();
    SweepResult { records, aggregates }
}
