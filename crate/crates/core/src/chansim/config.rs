use alloc::format;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of mm-wave probe beams measured for the partial CSI block.
pub const PROBE_BEAMS: usize = 16;
/// Number of leading mm-wave subcarriers on which probes are measured.
pub const PROBE_SUBCARRIERS: usize = 8;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Urban,
    Rural,
    Highway,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Urban, Scenario::Rural, Scenario::Highway];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Urban => "urban",
            Scenario::Rural => "rural",
            Scenario::Highway => "highway",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "urban" | "u" => Some(Scenario::Urban),
            "rural" | "r" => Some(Scenario::Rural),
            "highway" | "h" => Some(Scenario::Highway),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MacKind {
    #[serde(rename = "c-v2x")]
    CV2X,
    #[serde(rename = "ieee-802.11bd")]
    Ieee80211bd,
}

impl MacKind {
    pub const ALL: [MacKind; 2] = [MacKind::CV2X, MacKind::Ieee80211bd];

    pub fn name(self) -> &'static str {
        match self {
            MacKind::CV2X => "c-v2x",
            MacKind::Ieee80211bd => "ieee-802.11bd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "c-v2x" | "cv2x" => Some(MacKind::CV2X),
            "ieee-802.11bd" | "802.11bd" | "80211bd" | "ieee80211bd" => Some(MacKind::Ieee80211bd),
            _ => None,
        }
    }

    pub fn profile(self) -> MacProfile {
        match self {
            MacKind::CV2X => MacProfile {
                symbol_duration: 71.4e-6,
                frame_duration: 10e-3,
                beam_measurement_slots_per_frame: 140,
                csi_staleness: 10e-3,
            },
            MacKind::Ieee80211bd => MacProfile {
                symbol_duration: 8e-6,
                frame_duration: 10e-3,
                beam_measurement_slots_per_frame: 1250,
                csi_staleness: 10e-3,
            },
        }
    }
}

/// Timing abstraction of a MAC protocol: the timebase for beam-training
/// overhead and for CSI aging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacProfile {
    /// Seconds per beam measurement slot.
    pub symbol_duration: f64,
    pub frame_duration: f64,
    pub beam_measurement_slots_per_frame: usize,
    /// Delay between CSI capture and beam application, seconds.
    pub csi_staleness: f64,
}

impl MacProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_duration > 0.0) || !self.frame_duration.is_finite() {
            return Err(Error::Config(format!(
                "symbol duration must be positive, got {}",
                self.symbol_duration
            )));
        }
        let slots = self.beam_measurement_slots_per_frame as f64 * self.symbol_duration;
        if self.frame_duration < slots {
            return Err(Error::Config(format!(
                "frame of {} s cannot hold {} slots of {} s",
                self.frame_duration, self.beam_measurement_slots_per_frame, self.symbol_duration
            )));
        }
        if !(self.csi_staleness >= 0.0) {
            return Err(Error::Config("csi staleness must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntennaDims {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl AntennaDims {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        AntennaDims { x, y, z }
    }

    pub fn elements(&self) -> usize {
        self.x * self.y * self.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo >= 0.0 && self.hi >= self.lo
    }
}

/// Scenario attributes of one generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub mac: MacKind,
    pub n_basestations: usize,
    /// Users generated for this run.
    pub n_users: usize,
    /// User count of the full-size dataset, kept as metadata.
    pub paper_users: usize,
    pub mmwave_antenna: AntennaDims,
    pub sub6_antenna: AntennaDims,
    /// Element spacing in wavelengths.
    pub antenna_spacing: f64,
    pub n_paths: usize,
    pub n_beams: usize,
    pub sub6_subcarriers: usize,
    pub mmwave_subcarriers: usize,
    /// km/h
    pub velocity_range: Interval,
    /// m
    pub distance_range: Interval,
    pub blockage_prob: f64,
    pub carrier_freq_sub6: f64,
    pub carrier_freq_mmwave: f64,
    pub bandwidth_sub6: f64,
    pub bandwidth_dsrc: f64,
    pub bandwidth_mmwave: f64,
    /// SNR used when labelling the oracle beam, dB.
    pub label_snr_db: f64,
    pub base_seed: u64,
}

impl ScenarioConfig {
    /// Desk-scale configuration for `scenario` (5000 users).
    pub fn new(scenario: Scenario) -> Self {
        let (n_bs, paper_users, blockage) = match scenario {
            Scenario::Urban => (4, 63_350, 0.4),
            Scenario::Rural => (3, 45_250, 0.5),
            Scenario::Highway => (2, 58_610, 0.2),
        };
        ScenarioConfig {
            scenario,
            mac: MacKind::Ieee80211bd,
            n_basestations: n_bs,
            n_users: 5000,
            paper_users,
            mmwave_antenna: AntennaDims::new(1, 32, 8),
            sub6_antenna: AntennaDims::new(1, 4, 2),
            antenna_spacing: 0.5,
            n_paths: 5,
            n_beams: 512,
            sub6_subcarriers: 32,
            mmwave_subcarriers: 64,
            velocity_range: Interval::new(0.0, 150.0),
            distance_range: Interval::new(10.0, 150.0),
            blockage_prob: blockage,
            carrier_freq_sub6: 3.5e9,
            carrier_freq_mmwave: 60e9,
            bandwidth_sub6: 20e6,
            bandwidth_dsrc: 20e6,
            bandwidth_mmwave: 500e6,
            label_snr_db: 10.0,
            base_seed: 0,
        }
    }

    /// Same attributes with the full-size user population.
    pub fn paper_scale(scenario: Scenario) -> Self {
        let mut c = Self::new(scenario);
        c.n_users = c.paper_users;
        c
    }

    pub fn mac_profile(&self) -> MacProfile {
        self.mac.profile()
    }

    pub fn profile(&self) -> ScenarioProfile {
        ScenarioProfile::for_scenario(self.scenario)
    }

    /// Azimuth oversampling implied by `n_beams` over the mm-wave array.
    pub fn azimuth_oversampling(&self) -> usize {
        let per_os = self.mmwave_antenna.y * self.mmwave_antenna.z;
        self.n_beams.checked_div(per_os).unwrap_or(0)
    }

    /// Complex feature positions: full sub-6 CSI followed by the probe block.
    pub fn feature_length(&self) -> usize {
        self.sub6_antenna.elements() * self.sub6_subcarriers + PROBE_BEAMS * PROBE_SUBCARRIERS
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: alloc::string::String| Err(Error::Config(m));
        for (name, dims) in [("mmwave_antenna", self.mmwave_antenna), ("sub6_antenna", self.sub6_antenna)] {
            if dims.x != 1 || dims.y == 0 || dims.z == 0 {
                return cfg(format!("{name} must be a 1×y×z planar array, got {dims:?}"));
            }
        }
        if self.n_basestations == 0 || self.n_paths == 0 {
            return cfg("need at least one base station and one path".into());
        }
        let per_os = self.mmwave_antenna.y * self.mmwave_antenna.z;
        if self.n_beams == 0 || !self.n_beams.is_multiple_of(per_os) {
            return cfg(format!(
                "{} beams is not a whole azimuth oversampling of the {}×{} array",
                self.n_beams, self.mmwave_antenna.y, self.mmwave_antenna.z
            ));
        }
        let n_az = self.azimuth_oversampling() * self.mmwave_antenna.y;
        if n_az < PROBE_BEAMS || !n_az.is_multiple_of(PROBE_BEAMS) {
            return cfg(format!("{n_az} azimuth beams cannot host {PROBE_BEAMS} evenly strided probes"));
        }
        if self.sub6_subcarriers == 0 || self.mmwave_subcarriers < PROBE_SUBCARRIERS {
            return cfg(format!(
                "need ≥1 sub-6 subcarrier and ≥{PROBE_SUBCARRIERS} mm-wave subcarriers"
            ));
        }
        if !(0.0..=1.0).contains(&self.blockage_prob) {
            return cfg(format!("blockage probability {} outside [0,1]", self.blockage_prob));
        }
        if !self.velocity_range.valid() || !self.distance_range.valid() {
            return cfg("velocity/distance ranges must be non-empty and non-negative".into());
        }
        if !(self.distance_range.lo > 0.0) {
            return cfg("distance range must be strictly positive".into());
        }
        let positive = [
            self.antenna_spacing,
            self.carrier_freq_sub6,
            self.carrier_freq_mmwave,
            self.bandwidth_sub6,
            self.bandwidth_mmwave,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return cfg("spacing, carriers and bandwidths must be positive".into());
        }
        if !self.label_snr_db.is_finite() {
            return cfg("label SNR must be finite".into());
        }
        self.mac_profile().validate()
    }
}

/// Large-scale statistics of the stochastic geometric channel per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfile {
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    /// Spacing between neighbouring base stations along the road, m.
    pub bs_spacing_m: f64,
    /// AoD azimuths are drawn from ±this angle about array broadside, rad.
    pub sector_half_width: f64,
    pub los_k_factor_db: f64,
    /// Log-normal shadowing spread of scattered-path powers, dB.
    pub nlos_shadow_db: f64,
    /// Spread of the per-band amplitude perturbation, dB.
    pub band_decorrelation_db: f64,
    pub mean_excess_delay_s: f64,
    pub path_loss_exponent: f64,
    /// Distance at which the total path power is 1, m.
    pub reference_distance_m: f64,
}

impl ScenarioProfile {
    pub fn for_scenario(s: Scenario) -> Self {
        let deg = PI / 180.0;
        match s {
            Scenario::Urban => ScenarioProfile {
                bs_height_m: 6.0,
                ue_height_m: 1.5,
                bs_spacing_m: 200.0,
                sector_half_width: 60.0 * deg,
                los_k_factor_db: 7.0,
                nlos_shadow_db: 6.0,
                band_decorrelation_db: 1.5,
                mean_excess_delay_s: 60e-9,
                path_loss_exponent: 2.0,
                reference_distance_m: 40.0,
            },
            Scenario::Rural => ScenarioProfile {
                bs_height_m: 8.0,
                ue_height_m: 1.5,
                bs_spacing_m: 400.0,
                sector_half_width: 60.0 * deg,
                los_k_factor_db: 9.0,
                nlos_shadow_db: 5.0,
                band_decorrelation_db: 1.5,
                mean_excess_delay_s: 40e-9,
                path_loss_exponent: 2.2,
                reference_distance_m: 40.0,
            },
            Scenario::Highway => ScenarioProfile {
                bs_height_m: 6.0,
                ue_height_m: 1.5,
                bs_spacing_m: 300.0,
                sector_half_width: 45.0 * deg,
                los_k_factor_db: 10.0,
                nlos_shadow_db: 4.0,
                band_decorrelation_db: 1.5,
                mean_excess_delay_s: 30e-9,
                path_loss_exponent: 2.0,
                reference_distance_m: 40.0,
            },
        }
    }
}
