//! Experiment configuration: strict TOML parsing (unknown keys abort with the
//! offending key name), per-experiment defaults and dotted-path overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::dbm_to_watt;
use crate::linkmodel::{CfoModel, EstimatorModel, RateMap};
use crate::propagation::PropagationParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MuGain,
    Das,
    Femto,
    Cfo,
    PilotPower,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mu-gain" => Ok(ExperimentKind::MuGain),
            "das" => Ok(ExperimentKind::Das),
            "femto" => Ok(ExperimentKind::Femto),
            "cfo" => Ok(ExperimentKind::Cfo),
            "pilot-power" => Ok(ExperimentKind::PilotPower),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MuGain => "mu-gain",
            ExperimentKind::Das => "das",
            ExperimentKind::Femto => "femto",
            ExperimentKind::Cfo => "cfo",
            ExperimentKind::PilotPower => "pilot-power",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub rings: usize,
    pub isd_m: f64,
    pub rru_fraction: f64,
    pub rru_antennas: usize,
    pub cell_power_dbm: f64,
    pub femto_power_dbm: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            rings: 0,
            isd_m: 500.0,
            rru_fraction: 2.0 / 3.0,
            rru_antennas: 2,
            cell_power_dbm: 46.0,
            femto_power_dbm: 20.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    /// Noise power over the relevant band (per RB for scheduling experiments,
    /// full band for the wideband ones), dBm.
    pub noise_dbm: f64,
    /// Fixed interference floor standing in for base stations beyond the
    /// explicitly simulated cells, dBm over the same band as `noise_dbm`.
    pub interference_floor_dbm: f64,
    pub macro_shadowing_std_db: f64,
    pub femto_shadowing_std_db: f64,
    pub wall_loss_db: f64,
    pub carrier_hz: f64,
    pub tti_s: f64,
    pub velocity_kmh: f64,
    /// Optional receive antenna correlation (0 = i.i.d.).
    pub rx_correlation: f64,
    pub pattern_beamwidth_deg: f64,
    pub pattern_max_attenuation_db: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            noise_dbm: -112.4,
            interference_floor_dbm: -79.0,
            macro_shadowing_std_db: 8.0,
            femto_shadowing_std_db: 4.0,
            wall_loss_db: 10.0,
            carrier_hz: 2.1e9,
            tti_s: 1e-3,
            velocity_kmh: 30.0,
            rx_correlation: 0.0,
            pattern_beamwidth_deg: 70.0,
            pattern_max_attenuation_db: 20.0,
        }
    }
}

impl PropagationConfig {
    pub fn params(&self) -> PropagationParams {
        PropagationParams {
            macro_shadowing_std_db: self.macro_shadowing_std_db,
            femto_shadowing_std_db: self.femto_shadowing_std_db,
            wall_loss_db: self.wall_loss_db,
            carrier_hz: self.carrier_hz,
            tti_s: self.tti_s,
            pattern_beamwidth_deg: self.pattern_beamwidth_deg,
            pattern_max_attenuation_db: self.pattern_max_attenuation_db,
            min_distance_m: 10.0,
        }
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watt(self.noise_dbm)
    }

    pub fn floor_w(&self) -> f64 {
        dbm_to_watt(self.interference_floor_dbm)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub rate_efficiency: f64,
    pub rate_cap_bits: f64,
    pub estimator_noise_coeff: f64,
    pub estimator_floor_coeff: f64,
    /// Pilot resource elements per RB and antenna port; total density scales
    /// linearly with the transmit antenna count.
    pub pilot_density_per_port: f64,
    pub cfo_mse_coeff: f64,
    pub cfo_observations: usize,
    /// Force a zero residual CFO (both curves collapse to zero loss).
    pub cfo_force_zero: bool,
    /// Pilot+data power budget for the pilot-power study, W.
    pub power_budget_w: f64,
    /// Operating SNR of the pilot-power study under unit allocation, dB.
    pub pilot_snr_db: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        let cfo = CfoModel::default();
        LinkConfig {
            rate_efficiency: 0.75,
            rate_cap_bits: 4.5,
            estimator_noise_coeff: 1.0,
            estimator_floor_coeff: 1e-5,
            pilot_density_per_port: 8.0,
            cfo_mse_coeff: cfo.mse_coeff,
            cfo_observations: cfo.n_observations,
            cfo_force_zero: false,
            power_budget_w: 2.0,
            pilot_snr_db: 20.0,
        }
    }
}

impl LinkConfig {
    pub fn rate_map(&self) -> RateMap {
        RateMap {
            efficiency: self.rate_efficiency,
            cap_bits: self.rate_cap_bits,
        }
    }

    pub fn estimator(&self, n_tx: usize) -> EstimatorModel {
        EstimatorModel {
            noise_coeff: self.estimator_noise_coeff,
            floor_coeff: self.estimator_floor_coeff,
            pilot_density: self.pilot_density_per_port * n_tx as f64,
        }
    }

    pub fn cfo_model(&self) -> CfoModel {
        CfoModel {
            mse_coeff: self.cfo_mse_coeff,
            n_observations: self.cfo_observations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    pub n_rb: usize,
    pub rb_bandwidth_hz: f64,
    pub pf_window_ttis: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            n_rb: 12,
            rb_bandwidth_hz: 180e3,
            pf_window_ttis: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MimoConfig {
    pub n_rx: usize,
    pub feedback_bits: u32,
    pub pu2rc_matrix_bits: u32,
}

impl Default for MimoConfig {
    fn default() -> Self {
        MimoConfig {
            n_rx: 4,
            feedback_bits: 8,
            pu2rc_matrix_bits: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub n_clusters: usize,
    pub users_per_cluster: usize,
    pub cluster_radius_m: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            n_clusters: 10,
            users_per_cluster: 6,
            cluster_radius_m: 40.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// User counts per cell for the scheduling and DAS studies.
    pub user_counts: Vec<usize>,
    /// Femto AP counts for the overlay study.
    pub femto_counts: Vec<usize>,
    pub velocities_kmh: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    /// Antenna configuration of the multi-user gain study, e.g. "2x2".
    pub antenna_config: String,
    /// Antenna configurations of the pilot-power study.
    pub antenna_configs: Vec<String>,
    /// Transceiver modes of the DAS study.
    pub das_modes: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            user_counts: vec![2, 5, 10, 20, 40, 64],
            femto_counts: (0..=10).collect(),
            velocities_kmh: (0..=10).map(|i| 50.0 * i as f64).collect(),
            snr_grid_db: vec![6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            antenna_config: "1x1".to_string(),
            antenna_configs: vec!["1x1".into(), "2x2".into(), "4x4".into()],
            das_modes: vec![
                "svd-perfect".into(),
                "clsm-quantized".into(),
                "zf-perfect".into(),
                "zf-quantized".into(),
                "pu2rc-quantized".into(),
            ],
        }
    }
}

/// Full experiment configuration. Parsing is strict: any unknown key aborts
/// with the offending key name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub n_drops: usize,
    pub n_tti: usize,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    #[serde(default)]
    pub mimo: MimoConfig,
    #[serde(default)]
    pub clusters: ClusterConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    /// Built-in defaults per experiment; runtime-calibrated constants live
    /// here, every one of them overridable.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            experiment: kind,
            seed: 17,
            n_drops: 50,
            n_tti: 200,
            layout: LayoutConfig::default(),
            propagation: PropagationConfig::default(),
            link: LinkConfig::default(),
            scheduler: SchedulerConfig::default(),
            mimo: MimoConfig::default(),
            clusters: ClusterConfig::default(),
            sweep: SweepConfig::default(),
        };
        match kind {
            ExperimentKind::MuGain => {
                // Tighter front-to-back keeps the same-site interference
                // geometry below the rate cap through the sweep, so the
                // multi-user gain curve stays in the unsaturated regime.
                cfg.propagation.pattern_max_attenuation_db = 14.0;
            }
            ExperimentKind::Das => {
                cfg.n_drops = 50;
                cfg.n_tti = 10;
                // Wideband operation: one resource covering the whole band.
                cfg.scheduler.n_rb = 1;
                cfg.scheduler.rb_bandwidth_hz = 10e6;
                cfg.propagation.noise_dbm = -95.0;
                cfg.propagation.interference_floor_dbm = -78.0;
                cfg.propagation.velocity_kmh = 3.0;
                cfg.sweep.user_counts = vec![2, 4, 8, 12];
            }
            ExperimentKind::Femto => {
                cfg.layout.rings = 1;
                cfg.n_tti = 1;
                // Full 10 MHz band for the wideband SINR snapshot.
                cfg.propagation.noise_dbm = -95.0;
                cfg.propagation.interference_floor_dbm = -130.0;
            }
            ExperimentKind::Cfo => {
                cfg.n_drops = 10_000;
            }
            ExperimentKind::PilotPower => {
                cfg.n_drops = 1;
                cfg.n_tti = 1;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_drops == 0 {
            return Err(Error::Config("n_drops must be positive".into()));
        }
        if self.n_tti == 0 {
            return Err(Error::Config("n_tti must be positive".into()));
        }
        if self.scheduler.n_rb == 0 || self.scheduler.rb_bandwidth_hz <= 0.0 {
            return Err(Error::Config("resource grid must be positive".into()));
        }
        match self.experiment {
            ExperimentKind::MuGain => {
                if self.sweep.user_counts.is_empty() {
                    return Err(Error::Config("sweep.user_counts must be non-empty".into()));
                }
                parse_antenna_config(&self.sweep.antenna_config)?;
            }
            ExperimentKind::Das => {
                if self.sweep.user_counts.is_empty() {
                    return Err(Error::Config("sweep.user_counts must be non-empty".into()));
                }
                if self.sweep.das_modes.is_empty() {
                    return Err(Error::Config("sweep.das_modes must be non-empty".into()));
                }
            }
            ExperimentKind::Femto => {
                if self.sweep.femto_counts.is_empty() {
                    return Err(Error::Config("sweep.femto_counts must be non-empty".into()));
                }
                let max = self.sweep.femto_counts.iter().max().unwrap();
                if *max > self.clusters.n_clusters {
                    return Err(Error::Config(format!(
                        "femto count {max} exceeds cluster count {}",
                        self.clusters.n_clusters
                    )));
                }
            }
            ExperimentKind::Cfo => {
                if self.sweep.snr_grid_db.is_empty() {
                    return Err(Error::Config("sweep.snr_grid_db must be non-empty".into()));
                }
            }
            ExperimentKind::PilotPower => {
                if self.sweep.velocities_kmh.is_empty() {
                    return Err(Error::Config(
                        "sweep.velocities_kmh must be non-empty".into(),
                    ));
                }
                if self
                    .sweep
                    .velocities_kmh
                    .iter()
                    .any(|v| *v < 0.0 || *v > 500.0)
                {
                    return Err(Error::Config(
                        "velocities must lie in [0, 500] km/h".into(),
                    ));
                }
                for a in &self.sweep.antenna_configs {
                    parse_antenna_config(a)?;
                }
            }
        }
        Ok(())
    }
}

/// Parses an "NxM" antenna configuration into (n_tx, n_rx).
pub fn parse_antenna_config(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(tx), Ok(rx)) = (parts[0].parse::<usize>(), parts[1].parse::<usize>()) {
            if tx >= 1 && rx >= 1 {
                return Ok((tx, rx));
            }
        }
    }
    Err(Error::Config(format!(
        "invalid antenna config '{s}', expected e.g. '2x2'"
    )))
}

/// Parses config TOML text, applying dotted-path overrides before the strict
/// deserialization.
pub fn parse_config_str(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
    config_from_table(table, overrides)
}

/// Loads a config file, applies dotted-path overrides, and deserializes
/// strictly.
pub fn load_config(
    path: &Path,
    expected: ExperimentKind,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = config_from_table(table, overrides)?;
    if cfg.experiment != expected {
        return Err(Error::Config(format!(
            "config file is for experiment '{}', requested '{}'",
            cfg.experiment.name(),
            expected.name()
        )));
    }
    Ok(cfg)
}

/// Builds the default config for `kind` and applies overrides.
pub fn default_config(kind: ExperimentKind, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    apply_overrides(&ExperimentConfig::default_for(kind), overrides)
}

/// Applies dotted-path overrides to an existing config by round-tripping it
/// through its TOML representation (values are re-validated strictly).
pub fn apply_overrides(
    cfg: &ExperimentConfig,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let table = toml::Table::try_from(cfg)
        .map_err(|e| Error::Config(format!("serializing config: {e}")))?;
    config_from_table(table, overrides)
}

fn config_from_table(
    mut table: toml::Table,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Parses `KEY=VALUE` pairs from the CLI.
pub fn parse_override(raw: &str) -> Result<(String, String)> {
    match raw.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!(
            "override '{raw}' must have the form key=value"
        ))),
    }
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{part}' in '{key}' is not a section")))?;
    }
    let leaf = parts[parts.len() - 1];
    current.insert(leaf.to_string(), parse_toml_value(value));
    Ok(())
}

/// Interprets the right-hand side of an override as a TOML literal, falling
/// back to a string.
fn parse_toml_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(table) = wrapped.parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}
