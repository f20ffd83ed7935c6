//! Benchmark configuration files.
//!
//! Configs are TOML. A `preset` fills every field; any key given explicitly
//! overrides the preset value. With `preset = "custom"` all sections are
//! required. Unknown keys are rejected.
//!
//! ```toml
//! preset = "case1"
//! trials = 20
//! seed = 7
//! snr_db = [-6, 0, 6, 12, 20]     # `inf` is a noiseless point
//! output = "results.csv"
//!
//! [scene]
//! targets = 10
//! pulses = 15
//! samples = 64
//! box_min = [-7000, -7000, 4000]
//! box_max = [7000, 7000, 8000]
//!
//! [transmit]
//! elements = 16                   # square grid, must be n²
//! center = [0, -8000, 0]
//!
//! [[receive]]
//! center = [-8000, 8000, 0]
//! x = { pitch_a = 4, pitch_b = 7, len_a = 4, len_b = 4 }
//! y = { pitch_a = 4, pitch_b = 7, len_a = 4, len_b = 4 }
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::geometry::{build_receive_layout, CoprimeAxisSpec, ReceiveArrayLayout, TransmitArrayLayout};
use crate::scene::TargetBox;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Case1,
    Case2,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveSpec {
    pub center: Vec3,
    pub x: CoprimeAxisSpec,
    pub y: CoprimeAxisSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmitSpec {
    pub elements: usize,
    pub center: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub targets: usize,
    pub pulses: usize,
    pub samples: usize,
    pub target_box: TargetBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub preset: Preset,
    pub transmit: TransmitSpec,
    pub receives: Vec<ReceiveSpec>,
    pub scene: SceneSpec,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
}

const COPRIME_4_7: CoprimeAxisSpec = CoprimeAxisSpec {
    pitch_a: 4,
    pitch_b: 7,
    len_a: 4,
    len_b: 4,
};

impl BenchConfig {
    /// Three coprime L-shaped receive arrays along `y = 8000λ`, the transmit
    /// array at `(0, −8000λ, 0)`, targets in `[−7000, 7000]² × [4000, 8000]`.
    pub fn preset(preset: Preset) -> Result<Self> {
        let (elements, pulses, targets) = match preset {
            Preset::Case1 => (16, 15, 10),
            Preset::Case2 => (49, 20, 25),
            Preset::Custom => {
                return Err(Error::Config("the custom preset has no defaults".into()))
            }
        };
        let receives = [-8000.0, 0.0, 8000.0]
            .into_iter()
            .map(|x| ReceiveSpec {
                center: Vec3::new(x, 8000.0, 0.0),
                x: COPRIME_4_7,
                y: COPRIME_4_7,
            })
            .collect();
        Ok(Self {
            preset,
            transmit: TransmitSpec {
                elements,
                center: Vec3::new(0.0, -8000.0, 0.0),
            },
            receives,
            scene: SceneSpec {
                targets,
                pulses,
                samples: 64,
                target_box: TargetBox::new(
                    Vec3::new(-7000.0, -7000.0, 4000.0),
                    Vec3::new(7000.0, 7000.0, 8000.0),
                )?,
            },
            snr_grid: vec![-6.0, 0.0, 6.0, 12.0, 20.0],
            trials: 200,
            seed: 0,
            output: PathBuf::from("results.csv"),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_grid.is_empty() {
            return Err(Error::Config("snr grid is empty".into()));
        }
        if let Some(bad) = self.snr_grid.iter().find(|x| x.is_nan() || **x == f64::NEG_INFINITY) {
            return Err(Error::Config(format!("invalid SNR value {bad}")));
        }
        if self.receives.is_empty() {
            return Err(Error::Config("at least one receive array is required".into()));
        }
        let s = &self.scene;
        if s.targets == 0 || s.pulses == 0 || s.samples == 0 {
            return Err(Error::Config("scene targets, pulses and samples must be positive".into()));
        }
        if s.target_box.is_degenerate() {
            return Err(Error::Config("scene box is degenerate".into()));
        }
        for (m, r) in self.receives.iter().enumerate() {
            r.x.validate()
                .and_then(|_| r.y.validate())
                .map_err(|e| Error::Config(format!("receive[{m}]: {e}")))?;
        }
        self.transmit_layout()?;
        Ok(())
    }

    pub fn transmit_layout(&self) -> Result<TransmitArrayLayout> {
        TransmitArrayLayout::square(self.transmit.elements, self.transmit.center, 1.0)
            .map_err(|e| Error::Config(format!("transmit: {e}")))
    }

    pub fn receive_layouts(&self) -> Result<Vec<ReceiveArrayLayout>> {
        self.receives
            .iter()
            .map(|r| build_receive_layout(r.x, r.y, r.center, 1.0))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<Preset>,
    trials: Option<usize>,
    seed: Option<u64>,
    snr_db: Option<Vec<f64>>,
    output: Option<PathBuf>,
    scene: Option<RawScene>,
    transmit: Option<RawTransmit>,
    receive: Option<Vec<RawReceive>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    targets: Option<usize>,
    pulses: Option<usize>,
    samples: Option<usize>,
    box_min: Option<[f64; 3]>,
    box_max: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransmit {
    elements: Option<usize>,
    center: Option<[f64; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReceive {
    center: [f64; 3],
    x: CoprimeAxisSpec,
    y: CoprimeAxisSpec,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("custom preset requires `{key}`")))
}

/// Parses and resolves a config document.
pub fn parse_config(text: &str) -> Result<BenchConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let preset = raw.preset.unwrap_or(Preset::Custom);

    let config = match preset {
        Preset::Custom => {
            let scene = required(raw.scene, "scene")?;
            let transmit = required(raw.transmit, "transmit")?;
            let receive = required(raw.receive, "receive")?;
            let target_box = TargetBox::new(
                Vec3::from(required(scene.box_min, "scene.box_min")?),
                Vec3::from(required(scene.box_max, "scene.box_max")?),
            )
            .map_err(|e| Error::Config(e.to_string()))?;
            BenchConfig {
                preset,
                transmit: TransmitSpec {
                    elements: required(transmit.elements, "transmit.elements")?,
                    center: Vec3::from(required(transmit.center, "transmit.center")?),
                },
                receives: receive
                    .into_iter()
                    .map(|r| ReceiveSpec {
                        center: Vec3::from(r.center),
                        x: r.x,
                        y: r.y,
                    })
                    .collect(),
                scene: SceneSpec {
                    targets: required(scene.targets, "scene.targets")?,
                    pulses: required(scene.pulses, "scene.pulses")?,
                    samples: required(scene.samples, "scene.samples")?,
                    target_box,
                },
                snr_grid: required(raw.snr_db, "snr_db")?,
                trials: required(raw.trials, "trials")?,
                seed: raw.seed.unwrap_or(0),
                output: raw.output.unwrap_or_else(|| PathBuf::from("results.csv")),
            }
        }
        preset => {
            let mut c = BenchConfig::preset(preset)?;
            let scene = raw.scene.unwrap_or_default();
            c.scene.targets = scene.targets.unwrap_or(c.scene.targets);
            c.scene.pulses = scene.pulses.unwrap_or(c.scene.pulses);
            c.scene.samples = scene.samples.unwrap_or(c.scene.samples);
            if scene.box_min.is_some() || scene.box_max.is_some() {
                c.scene.target_box = TargetBox::new(
                    scene.box_min.map_or(c.scene.target_box.min, Vec3::from),
                    scene.box_max.map_or(c.scene.target_box.max, Vec3::from),
                )
                .map_err(|e| Error::Config(e.to_string()))?;
            }
            let transmit = raw.transmit.unwrap_or_default();
            c.transmit.elements = transmit.elements.unwrap_or(c.transmit.elements);
            c.transmit.center = transmit.center.map_or(c.transmit.center, Vec3::from);
            if let Some(receive) = raw.receive {
                c.receives = receive
                    .into_iter()
                    .map(|r| ReceiveSpec {
                        center: Vec3::from(r.center),
                        x: r.x,
                        y: r.y,
                    })
                    .collect();
            }
            c.snr_grid = raw.snr_db.unwrap_or(c.snr_grid);
            c.trials = raw.trials.unwrap_or(c.trials);
            c.seed = raw.seed.unwrap_or(c.seed);
            c.output = raw.output.unwrap_or(c.output);
            c
        }
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<BenchConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
