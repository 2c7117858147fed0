//! Run configuration: a flat JSON file with unit-suffixed keys, strict about
//! unknown keys, with paper-matched defaults filled in per experiment.
//!
//! The resolved form echoes back out as `config.resolved.json`; re-parsing
//! that echo reproduces the same resolved configuration, including any
//! calibrated `s0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainConfig;

/// The experiments the artifact can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    AngleSweep,
    MandelProbe,
    MandelDiff,
    SlitScan,
    TwoSpot,
    Lg,
    OracleVerify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::AngleSweep => "angle-sweep",
            Experiment::MandelProbe => "mandel-probe",
            Experiment::MandelDiff => "mandel-diff",
            Experiment::SlitScan => "slit-scan",
            Experiment::TwoSpot => "two-spot",
            Experiment::Lg => "lg",
            Experiment::OracleVerify => "oracle-verify",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "angle-sweep" => Ok(Experiment::AngleSweep),
            "mandel-probe" => Ok(Experiment::MandelProbe),
            "mandel-diff" => Ok(Experiment::MandelDiff),
            "slit-scan" => Ok(Experiment::SlitScan),
            "two-spot" => Ok(Experiment::TwoSpot),
            "lg" => Ok(Experiment::Lg),
            "oracle-verify" => Ok(Experiment::OracleVerify),
            other => Err(Error::Config {
                key: "experiment".into(),
                message: format!("unknown experiment `{other}`"),
            }),
        }
    }
}

/// Slit orientation as a config string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitOrientation {
    Azimuthal,
    Polar,
}

/// Raw configuration file contents. Every key is optional; defaults depend on
/// the experiment. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,

    // Amplifier.
    pub theta0_mrad: Option<f64>,
    pub lambda_m: Option<f64>,
    pub cell_length_m: Option<f64>,
    pub pump_far_width_mrad: Option<f64>,
    pub overlap_width_mrad: Option<f64>,
    /// Direct squeeze strength; omit to calibrate against `target_gain`.
    pub s0: Option<f64>,
    pub target_gain: Option<f64>,

    // Detection.
    pub detection_eta: Option<f64>,

    // Grid.
    pub grid_half_extent_mrad: Option<f64>,
    pub grid_n_side: Option<usize>,

    // Seed.
    pub seed_theta_mrad: Option<f64>,
    pub seed_waist_mrad: Option<f64>,
    pub seed_photons: Option<f64>,

    // Angle sweep.
    pub sweep_theta_min_mrad: Option<f64>,
    pub sweep_theta_max_mrad: Option<f64>,
    pub sweep_points: Option<usize>,

    // Mandel scans.
    pub transmission_points: Option<usize>,

    // Slit scan.
    pub slit_width_mrad: Option<f64>,
    pub slit_orientation: Option<SlitOrientation>,
    pub slit_scan_halfspan_mrad: Option<f64>,
    pub slit_scan_points: Option<usize>,
    pub conjugate_slit_offset_mrad: Option<f64>,

    // Two-spot.
    pub spot_separation_mrad: Option<f64>,

    // LG.
    pub lg_ell: Option<i32>,

    /// Reserved; the model is deterministic and never draws random numbers.
    pub random_seed: Option<u64>,

    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            key: "<file>".into(),
            message: e.to_string(),
        })
    }

    /// Fill defaults for the given experiment and validate.
    pub fn resolve(&self, experiment: Experiment) -> Result<ResolvedConfig> {
        let d = ExperimentDefaults::for_experiment(experiment);
        let resolved = ResolvedConfig {
            experiment,
            theta0_mrad: self.theta0_mrad.unwrap_or(7.0),
            lambda_m: self.lambda_m.unwrap_or(795e-9),
            cell_length_m: self.cell_length_m.unwrap_or(12e-3),
            pump_far_width_mrad: self.pump_far_width_mrad.unwrap_or(0.5),
            overlap_width_mrad: self.overlap_width_mrad.unwrap_or(6.0),
            s0: self.s0,
            target_gain: self.target_gain.unwrap_or(4.5),
            detection_eta: self.detection_eta.unwrap_or(0.9),
            grid_half_extent_mrad: self.grid_half_extent_mrad.unwrap_or(d.half_extent),
            grid_n_side: self.grid_n_side.unwrap_or(d.n_side),
            seed_theta_mrad: self.seed_theta_mrad.unwrap_or(self.theta0_mrad.unwrap_or(7.0)),
            seed_waist_mrad: self.seed_waist_mrad.unwrap_or(d.seed_waist),
            seed_photons: self.seed_photons.unwrap_or(1e6),
            sweep_theta_min_mrad: self.sweep_theta_min_mrad.unwrap_or(0.5),
            sweep_theta_max_mrad: self.sweep_theta_max_mrad.unwrap_or(14.0),
            sweep_points: self.sweep_points.unwrap_or(28),
            transmission_points: self.transmission_points.unwrap_or(20),
            slit_width_mrad: self.slit_width_mrad.unwrap_or(0.4),
            slit_orientation: self.slit_orientation.unwrap_or(SlitOrientation::Azimuthal),
            slit_scan_halfspan_mrad: self.slit_scan_halfspan_mrad.unwrap_or(2.5),
            slit_scan_points: self.slit_scan_points.unwrap_or(41),
            conjugate_slit_offset_mrad: self.conjugate_slit_offset_mrad.unwrap_or(0.0),
            spot_separation_mrad: self.spot_separation_mrad.unwrap_or(3.0),
            lg_ell: self.lg_ell.unwrap_or(1),
            random_seed: self.random_seed,
            out_dir: self.out_dir.clone(),
        };
        resolved.validate()?;
        Ok(resolved)
    }
}

struct ExperimentDefaults {
    half_extent: f64,
    n_side: usize,
    seed_waist: f64,
}

impl ExperimentDefaults {
    fn for_experiment(e: Experiment) -> Self {
        match e {
            // 1D cuts at 256 pixels for the scan figures; the sweep grid is
            // wider so large-angle seeds stay inside.
            Experiment::AngleSweep => Self { half_extent: 16.0, n_side: 256, seed_waist: 0.5 },
            // On a 1D cut the beam must span several coherence lengths for
            // the multimode clipping signatures to show; the azimuthal
            // coherence cells of the real 2D beam are not present here.
            Experiment::MandelProbe | Experiment::MandelDiff => {
                Self { half_extent: 12.0, n_side: 256, seed_waist: 2.0 }
            }
            Experiment::SlitScan => Self { half_extent: 12.0, n_side: 256, seed_waist: 2.0 },
            // 2D runs at 64 pixels per side.
            Experiment::TwoSpot => Self { half_extent: 12.0, n_side: 64, seed_waist: 1.0 },
            Experiment::Lg => Self { half_extent: 12.0, n_side: 64, seed_waist: 2.0 },
            Experiment::OracleVerify => Self { half_extent: 12.0, n_side: 16, seed_waist: 1.0 },
        }
    }
}

/// Fully resolved configuration: every knob concrete except `s0`, which stays
/// `None` until the dispatcher calibrates it (the echo then carries the
/// calibrated value).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub theta0_mrad: f64,
    pub lambda_m: f64,
    pub cell_length_m: f64,
    pub pump_far_width_mrad: f64,
    pub overlap_width_mrad: f64,
    pub s0: Option<f64>,
    pub target_gain: f64,
    pub detection_eta: f64,
    pub grid_half_extent_mrad: f64,
    pub grid_n_side: usize,
    pub seed_theta_mrad: f64,
    pub seed_waist_mrad: f64,
    pub seed_photons: f64,
    pub sweep_theta_min_mrad: f64,
    pub sweep_theta_max_mrad: f64,
    pub sweep_points: usize,
    pub transmission_points: usize,
    pub slit_width_mrad: f64,
    pub slit_orientation: SlitOrientation,
    pub slit_scan_halfspan_mrad: f64,
    pub slit_scan_points: usize,
    pub conjugate_slit_offset_mrad: f64,
    pub spot_separation_mrad: f64,
    pub lg_ell: i32,
    pub random_seed: Option<u64>,
    pub out_dir: Option<String>,
}

impl ResolvedConfig {
    /// Paper defaults for one experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        RunConfig::default().resolve(experiment).expect("defaults are valid")
    }

    pub fn gain_config(&self) -> GainConfig {
        GainConfig {
            s0: self.s0.unwrap_or(1.0),
            theta0: self.theta0_mrad,
            lambda: self.lambda_m,
            cell_length: self.cell_length_m,
            pump_far_width: self.pump_far_width_mrad,
            overlap_width: self.overlap_width_mrad,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("theta0_mrad", self.theta0_mrad),
            ("lambda_m", self.lambda_m),
            ("cell_length_m", self.cell_length_m),
            ("pump_far_width_mrad", self.pump_far_width_mrad),
            ("overlap_width_mrad", self.overlap_width_mrad),
            ("grid_half_extent_mrad", self.grid_half_extent_mrad),
            ("seed_waist_mrad", self.seed_waist_mrad),
            ("seed_photons", self.seed_photons),
            ("slit_width_mrad", self.slit_width_mrad),
            ("slit_scan_halfspan_mrad", self.slit_scan_halfspan_mrad),
            ("spot_separation_mrad", self.spot_separation_mrad),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config { key: key.into(), message: format!("must be positive, got {v}") });
            }
        }
        if let Some(s0) = self.s0 {
            if !(s0.is_finite() && s0 >= 0.0) {
                return Err(Error::Config { key: "s0".into(), message: format!("must be ≥ 0, got {s0}") });
            }
        }
        if !(self.target_gain.is_finite() && self.target_gain >= 1.0) {
            return Err(Error::Config {
                key: "target_gain".into(),
                message: format!("must be ≥ 1, got {}", self.target_gain),
            });
        }
        if !(0.0..=1.0).contains(&self.detection_eta) {
            return Err(Error::Config {
                key: "detection_eta".into(),
                message: format!("must lie in [0,1], got {}", self.detection_eta),
            });
        }
        if self.grid_n_side < 2 {
            return Err(Error::Config {
                key: "grid_n_side".into(),
                message: format!("needs at least 2 pixels, got {}", self.grid_n_side),
            });
        }
        if self.sweep_points < 2 || self.slit_scan_points < 5 || self.transmission_points < 2 {
            return Err(Error::Config {
                key: "sweep_points".into(),
                message: "sweeps need at least a handful of points".into(),
            });
        }
        if self.sweep_theta_max_mrad <= self.sweep_theta_min_mrad {
            return Err(Error::Config {
                key: "sweep_theta_max_mrad".into(),
                message: "sweep range is empty".into(),
            });
        }
        if self.lg_ell.abs() > 3 {
            return Err(Error::Config {
                key: "lg_ell".into(),
                message: format!("|ell| ≤ 3 supported, got {}", self.lg_ell),
            });
        }
        Ok(())
    }

    /// Serialized echo written next to every experiment's outputs.
    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
