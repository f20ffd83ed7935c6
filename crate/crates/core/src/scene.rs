//! Scene generation and the coupled observation tensors.
//!
//! Every random draw goes through an explicit `ChaCha8Rng`, so a trial is a
//! pure function of its seed.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ccpd::CcpdFactors;
use crate::geometry::{direction_between, steering_vector, ArrayLayout, ReceiveArrayLayout, TransmitArrayLayout};
use crate::tensor::Tensor3;
use crate::{CMatrix, Error, Result, Vec3, C64};

/// Minimum angle between the DOAs of two targets at any receive array.
pub const DOA_SEPARATION: f64 = 1e-6;
pub const PLACEMENT_RETRIES: usize = 100;

/// Axis-aligned box, wavelength units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl TargetBox {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|i| !min[i].is_finite() || !max[i].is_finite() || min[i] > max[i]) {
            return Err(Error::InvalidArgument(format!("invalid box {min:?}..{max:?}")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|i| self.min[i] >= self.max[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub target_box: TargetBox,
    pub num_targets: usize,
    pub pulses: usize,
    pub samples_per_pulse: usize,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_box.is_degenerate() {
            return Err(Error::InvalidArgument("target box is degenerate".into()));
        }
        if self.num_targets == 0 || self.pulses == 0 || self.samples_per_pulse == 0 {
            return Err(Error::InvalidArgument(
                "targets, pulses and samples must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RadarScene {
    pub transmit: TransmitArrayLayout,
    pub receives: Vec<ReceiveArrayLayout>,
    pub targets: Vec<Vec3>,
}

/// Data tensors, with their clean copies and ground-truth factors when
/// simulated.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub tensors: Vec<Tensor3>,
    pub noiseless: Option<Vec<Tensor3>>,
    pub truth: Option<CcpdFactors>,
}

fn standard_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniform draws in `bounds`, redrawn until no two targets share a DOA at any
/// of the `arrays` centers.
pub fn sample_targets(
    bounds: &TargetBox,
    count: usize,
    arrays: &[Vec3],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec3>> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one target".into()));
    }
    let draw = |rng: &mut ChaCha8Rng| {
        Vec3::from_fn(|i, _| {
            let (lo, hi) = (bounds.min[i], bounds.max[i]);
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        })
    };
    for _ in 0..PLACEMENT_RETRIES {
        let targets: Vec<Vec3> = (0..count).map(|_| draw(rng)).collect();
        if well_separated(&targets, arrays) {
            return Ok(targets);
        }
    }
    Err(Error::Overcrowded {
        targets: count,
        retries: PLACEMENT_RETRIES,
    })
}

fn well_separated(targets: &[Vec3], arrays: &[Vec3]) -> bool {
    for center in arrays {
        let dirs: Option<Vec<_>> = targets
            .iter()
            .map(|t| direction_between(center, t).ok())
            .collect();
        let Some(dirs) = dirs else {
            return false;
        };
        for (i, a) in dirs.iter().enumerate() {
            if dirs[i + 1..].iter().any(|b| a.angle_to(b) < DOA_SEPARATION) {
                return false;
            }
        }
    }
    // coincident targets with no arrays to look from
    for (i, a) in targets.iter().enumerate() {
        if targets[i + 1..].iter().any(|b| a == b) {
            return false;
        }
    }
    true
}

/// Swerling-II fluctuations: one `K×R` matrix per receive array, i.i.d.
/// unit-variance circular Gaussian entries.
pub fn sample_rcs(targets: usize, pulses: usize, arrays: usize, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    (0..arrays)
        .map(|_| CMatrix::from_fn(pulses, targets, |_, _| standard_complex(rng)))
        .collect()
}

/// Random `T×J` probing waveforms.
pub fn sample_waveforms(samples: usize, transmit_elements: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    if samples < transmit_elements {
        log::warn!("T = {samples} < J = {transmit_elements}: waveform matrix is rank deficient");
    }
    CMatrix::from_fn(samples, transmit_elements, |_, _| standard_complex(rng))
}

/// Noiseless observation tensors
/// `X^(m)[:, :, k] = Σ_r c^(m)_{k,r} a_r^(m) (S t_r)ᵀ`.
pub fn simulate(scene: &RadarScene, waveforms: &CMatrix, rcs: &[CMatrix]) -> Result<ObservationSet> {
    let r = scene.targets.len();
    let j = scene.transmit.elements.len();
    if waveforms.ncols() != j {
        return Err(Error::ShapeMismatch(format!(
            "waveforms have {} columns for {j} transmit elements",
            waveforms.ncols()
        )));
    }
    if rcs.len() != scene.receives.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} RCS matrices for {} receive arrays",
            rcs.len(),
            scene.receives.len()
        )));
    }
    let pulses = rcs.first().map_or(0, |c| c.nrows());
    if rcs.iter().any(|c| c.ncols() != r || c.nrows() != pulses) {
        return Err(Error::ShapeMismatch(format!("RCS matrices must be K×{r}")));
    }

    let mut transmit_steer = CMatrix::zeros(j, r);
    for (col, target) in scene.targets.iter().enumerate() {
        let dod = direction_between(&scene.transmit.center, target)?;
        transmit_steer.set_column(col, &steering_vector(&scene.transmit, &dod));
    }
    let b = waveforms * transmit_steer;

    let mut a_all = Vec::with_capacity(scene.receives.len());
    let mut tensors = Vec::with_capacity(scene.receives.len());
    for (layout, c) in scene.receives.iter().zip(rcs) {
        let mut a = CMatrix::zeros(layout.len(), r);
        for (col, target) in scene.targets.iter().enumerate() {
            let doa = direction_between(&layout.center, target)?;
            a.set_column(col, &steering_vector(layout, &doa));
        }
        tensors.push(crate::tensor::cpd_eval(&a, &b, c)?);
        a_all.push(a);
    }
    Ok(ObservationSet {
        noiseless: Some(tensors.clone()),
        tensors,
        truth: Some(CcpdFactors {
            a: a_all,
            b,
            c: rcs.to_vec(),
        }),
    })
}

/// Adds white circular Gaussian noise. The per-entry variance is the mean
/// squared magnitude of all clean entries (pooled over arrays) divided by
/// the linear SNR. An infinite SNR leaves the data clean.
pub fn add_noise(obs: &ObservationSet, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<ObservationSet> {
    let clean = obs
        .noiseless
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("observation set has no noiseless copy".into()))?;
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("SNR is NaN".into()));
    }
    let mut tensors = clean.clone();
    if snr_db == f64::INFINITY {
        return Ok(ObservationSet {
            tensors,
            noiseless: Some(clean.clone()),
            truth: obs.truth.clone(),
        });
    }
    let (energy, count) = clean.iter().fold((0.0, 0usize), |(e, n), t| {
        (e + t.norm().powi(2), n + t.data().len())
    });
    let variance = if count == 0 { 0.0 } else { energy / count as f64 } * 10f64.powf(-snr_db / 10.0);
    let sigma = variance.sqrt();
    for t in &mut tensors {
        for z in t.data_mut() {
            *z += standard_complex(rng) * sigma;
        }
    }
    Ok(ObservationSet {
        tensors,
        noiseless: Some(clean.clone()),
        truth: obs.truth.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_receive_layout, CoprimeAxisSpec};
    use crate::tensor::cpd_eval;
    use rand::SeedableRng;

    fn preset_box() -> TargetBox {
        TargetBox::new(Vec3::new(-7000.0, -7000.0, 4000.0), Vec3::new(7000.0, 7000.0, 8000.0)).unwrap()
    }

    fn centers() -> Vec<Vec3> {
        vec![
            Vec3::new(-8000.0, 8000.0, 0.0),
            Vec3::new(0.0, 8000.0, 0.0),
            Vec3::new(8000.0, 8000.0, 0.0),
        ]
    }

    #[test]
    fn targets_in_box_and_deterministic() {
        let b = preset_box();
        let draw = |seed| sample_targets(&b, 10, &centers(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let t = draw(1);
        assert_eq!(t.len(), 10);
        assert!(t.iter().all(|p| b.contains(p)));
        assert_eq!(t, draw(1));
        assert_ne!(t, draw(2));
    }

    #[test]
    fn degenerate_box_and_overcrowding() {
        let p = Vec3::new(1.0, 2.0, 30.0);
        let b = TargetBox::new(p, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_targets(&b, 1, &centers(), &mut rng).unwrap(), vec![p]);
        assert!(matches!(
            sample_targets(&b, 2, &centers(), &mut rng),
            Err(Error::Overcrowded { targets: 2, .. })
        ));
    }

    #[test]
    fn rcs_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = sample_rcs(10, 10_000, 1, &mut rng);
        let power: f64 = c[0].iter().map(|z| z.norm_sqr()).sum::<f64>() / c[0].len() as f64;
        assert!((power - 1.0).abs() < 0.02, "{power}");

        let c = sample_rcs(2, 10_000, 2, &mut rng);
        let cols = [c[0].column(0), c[0].column(1), c[1].column(0), c[1].column(1)];
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                let rho = (cols[i].adjoint() * cols[j])[(0, 0)].norm() / (cols[i].norm() * cols[j].norm());
                assert!(rho < 0.05, "{i},{j}: {rho}");
            }
        }
        let a = sample_rcs(3, 4, 2, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, sample_rcs(3, 4, 2, &mut ChaCha8Rng::seed_from_u64(9)));
    }

    #[test]
    fn waveforms_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = sample_waveforms(64, 16, &mut rng);
        assert_eq!(s.shape(), (64, 16));
        assert_eq!(s.rank(1e-8), 16);
        let one = sample_waveforms(1, 1, &mut rng);
        assert!(one[(0, 0)].norm() > 0.0);
        for _ in 0..100 {
            let s = sample_waveforms(20, 5, &mut rng);
            assert!(crate::linalg::svd(&s).s[4] > 0.0);
        }
    }

    fn small_scene(rng: &mut ChaCha8Rng) -> (RadarScene, CMatrix, Vec<CMatrix>) {
        let ax = CoprimeAxisSpec::new(2, 3, 3, 2).unwrap();
        let ay = CoprimeAxisSpec::new(2, 3, 2, 1).unwrap();
        let rx = build_receive_layout(ax, ay, Vec3::new(5.0, 0.0, 0.0), 1.0).unwrap();
        assert_eq!(rx.len(), 5);
        let tx = TransmitArrayLayout::new(1, 2, Vec3::new(0.0, -10.0, 0.0), 1.0).unwrap();
        let scene = RadarScene {
            transmit: tx,
            receives: vec![rx],
            targets: vec![Vec3::new(3.0, 40.0, 100.0), Vec3::new(-20.0, 10.0, 80.0)],
        };
        let s = sample_waveforms(6, 2, rng);
        let c = sample_rcs(2, 3, 1, rng);
        (scene, s, c)
    }

    #[test]
    fn simulate_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (scene, s, c) = small_scene(&mut rng);
        let obs = simulate(&scene, &s, &c).unwrap();
        let x = &obs.tensors[0];
        assert_eq!(x.dims(), (5, 6, 3));

        // independent evaluation of the signal model, phases built by hand
        let rx = &scene.receives[0];
        let tx = &scene.transmit;
        let phase = |pos: Vec3, center: Vec3, target: Vec3| {
            let v = (target - center).normalize();
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (pos - center).dot(&v))
        };
        use crate::geometry::ArrayLayout;
        for i in 0..5 {
            for t in 0..6 {
                for k in 0..3 {
                    let mut acc = C64::new(0.0, 0.0);
                    for (r, &target) in scene.targets.iter().enumerate() {
                        let a = phase(rx.position(i), rx.center, target);
                        let mut b = C64::new(0.0, 0.0);
                        for j in 0..tx.len() {
                            b += s[(t, j)] * phase(tx.position(j), tx.center, target);
                        }
                        acc += c[0][(k, r)] * a * b;
                    }
                    assert!((x.get(i, t, k) - acc).norm() < 1e-10);
                }
            }
        }

        let truth = obs.truth.as_ref().unwrap();
        let recon = cpd_eval(&truth.a[0], &truth.b, &truth.c[0]).unwrap();
        assert!(recon.distance(x) < 1e-12);
    }

    #[test]
    fn simulate_broadside_single_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ax = CoprimeAxisSpec::new(2, 3, 3, 2).unwrap();
        let rx = build_receive_layout(ax, ax, Vec3::zeros(), 1.0).unwrap();
        let tx = TransmitArrayLayout::new(1, 1, Vec3::zeros(), 1.0).unwrap();
        let scene = RadarScene {
            transmit: tx,
            receives: vec![rx],
            targets: vec![Vec3::new(0.0, 0.0, 1000.0)],
        };
        let s = sample_waveforms(4, 1, &mut rng);
        let c = sample_rcs(1, 1, 1, &mut rng);
        let obs = simulate(&scene, &s, &c).unwrap();
        let x = &obs.tensors[0];
        for i in 0..x.dims().0 {
            for t in 0..4 {
                assert!((x.get(i, t, 0) - c[0][(0, 0)] * s[(t, 0)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn simulate_is_multilinear_in_rcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (scene, s, c) = small_scene(&mut rng);
        let base = simulate(&scene, &s, &c).unwrap().tensors.remove(0);
        let mut c2 = c.clone();
        let alpha = C64::new(-1.5, 0.25);
        c2[0][(1, 0)] *= alpha;
        let scaled = simulate(&scene, &s, &c2).unwrap().tensors.remove(0);
        let truth = simulate(&scene, &s, &c).unwrap().truth.unwrap();
        for i in 0..5 {
            for t in 0..6 {
                for k in 0..3 {
                    let term = if k == 1 {
                        truth.a[0][(i, 0)] * truth.b[(t, 0)] * c[0][(1, 0)]
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let expect = base.get(i, t, k) + term * (alpha - 1.0);
                    assert!((scaled.get(i, t, k) - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (scene, s, c) = small_scene(&mut rng);
        let bad_s = sample_waveforms(6, 3, &mut rng);
        assert!(matches!(simulate(&scene, &bad_s, &c), Err(Error::ShapeMismatch(_))));
        assert!(matches!(simulate(&scene, &s, &[]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn noise_power_and_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let clean = Tensor3::from_fn(13, 64, 20, |_, _, _| standard_complex(&mut rng));
        let obs = ObservationSet {
            tensors: vec![clean.clone()],
            noiseless: Some(vec![clean.clone()]),
            truth: None,
        };
        let same = add_noise(&obs, f64::INFINITY, &mut rng).unwrap();
        assert_eq!(same.tensors[0], clean);

        let noisy = add_noise(&obs, 0.0, &mut rng).unwrap();
        let signal = clean.norm().powi(2);
        let noise = noisy.tensors[0].distance(&clean).powi(2);
        assert!((noise / signal - 1.0).abs() < 0.05, "{}", noise / signal);
        assert_eq!(noisy.noiseless.as_ref().unwrap()[0], clean);
        assert_eq!(noisy.tensors[0].dims(), clean.dims());

        let a = add_noise(&obs, 10.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = add_noise(&obs, 10.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.tensors, b.tensors);

        let bare = ObservationSet { tensors: vec![clean], noiseless: None, truth: None };
        assert!(add_noise(&bare, 0.0, &mut rng).is_err());
    }
}
