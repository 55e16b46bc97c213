//! Stochastic geometric propagation model.
//!
//! Each user sits in the sector of one base station. The path set holds one
//! line-of-sight path (suppressed under blockage) and `n_paths - 1` scattered
//! paths with log-normal powers, sector-uniform departure azimuths and
//! exponentially distributed excess delays. Both bands share angles and delays;
//! gains differ by a small log-normal perturbation and an independent phase.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SPEED_OF_LIGHT};
use crate::linalg::C64;
use crate::rng::{self, tag};

/// Frequency band of a synthesized channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Sub6,
    MmWave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain_mm: C64,
    pub gain_sub6: C64,
    /// Departure azimuth relative to array broadside, rad.
    pub aod_az: f64,
    /// Departure elevation, rad (negative points down).
    pub aod_el: f64,
    /// Absolute propagation delay, s.
    pub delay_s: f64,
    /// Arrival azimuth at the user in the world frame, rad.
    pub arrival_az: f64,
    pub arrival_el: f64,
    pub los: bool,
}

/// Kinematic point to force instead of drawing it.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Kinematics {
    pub velocity_kmh: Option<f64>,
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_index: usize,
    pub bs_position: [f64; 2],
    pub user_position: [f64; 2],
    pub velocity_kmh: f64,
    /// Direction of travel in the world frame, rad.
    pub heading: f64,
    /// Whether an unobstructed line-of-sight path exists.
    pub los: bool,
    /// Dynamic scene group (highway only; 0 elsewhere).
    pub scene: usize,
    pub seed: u64,
    pub paths: Vec<Path>,
}

/// Seed of sample `sample_index` under `base_seed`.
pub fn sample_seed(config: &ScenarioConfig, sample_index: usize) -> u64 {
    let scene = scene_of(config, sample_index) as u64;
    rng::derive_seed(config.base_seed, &[tag::GEOMETRY, scene, sample_index as u64])
}

fn scene_of(config: &ScenarioConfig, sample_index: usize) -> usize {
    match config.scenario {
        super::Scenario::Highway => sample_index % 10,
        _ => 0,
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn phase(rng: &mut impl Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// Samples the propagation geometry of user `sample_index`.
pub fn sample_geometry(config: &ScenarioConfig, sample_index: usize) -> Geometry {
    sample_geometry_at(config, sample_index, Kinematics::default())
}

/// As [`sample_geometry`], with optional forced velocity and/or distance. The
/// random stream is consumed identically either way, so every other attribute
/// is the same as in the unforced draw.
pub fn sample_geometry_at(config: &ScenarioConfig, sample_index: usize, forced: Kinematics) -> Geometry {
    let profile = config.profile();
    let seed = sample_seed(config, sample_index);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let bs_index = rng.random_range(0..config.n_basestations);
    let drawn_d = uniform(&mut rng, config.distance_range.lo, config.distance_range.hi);
    let az = uniform(&mut rng, -profile.sector_half_width, profile.sector_half_width);
    let drawn_v = uniform(&mut rng, config.velocity_range.lo, config.velocity_range.hi);
    let heading = if rng.random_bool(0.5) { 0.0 } else { PI };
    let blocked = rng.random::<f64>() < config.blockage_prob;

    let distance = forced.distance_m.unwrap_or(drawn_d);
    let velocity_kmh = forced.velocity_kmh.unwrap_or(drawn_v);
    let bs_position = [bs_index as f64 * profile.bs_spacing_m, 0.0];
    let user_position = [
        bs_position[0] + distance * az.sin(),
        bs_position[1] + distance * az.cos(),
    ];
    let dh = profile.bs_height_m - profile.ue_height_m;

    let k_lin = 10f64.powf(profile.los_k_factor_db / 10.0);
    let shadow = Normal::new(0.0, profile.nlos_shadow_db).expect("finite shadowing");
    let band_jitter = Normal::new(0.0, profile.band_decorrelation_db).expect("finite jitter");
    let excess = Exp::new(1.0 / profile.mean_excess_delay_s).expect("positive delay spread");

    let los_phase_mm = phase(&mut rng);
    let los_phase_sub6 = phase(&mut rng);
    let los_jitter_db = band_jitter.sample(&mut rng);

    let mut paths = Vec::with_capacity(config.n_paths);
    paths.push(los_path(distance, az, dh, user_position, bs_position));
    let mut weights = Vec::with_capacity(config.n_paths);
    weights.push(0.0);
    for _ in 1..config.n_paths {
        let s_az = uniform(&mut rng, -profile.sector_half_width, profile.sector_half_width);
        let s_d = uniform(&mut rng, config.distance_range.lo, config.distance_range.hi);
        let extra = excess.sample(&mut rng);
        let w = 10f64.powf(shadow.sample(&mut rng) / 10.0);
        let p_mm = phase(&mut rng);
        let p_sub6 = phase(&mut rng);
        let jitter_db = band_jitter.sample(&mut rng);
        let arrival_az = rng.random_range(-PI..PI);
        weights.push(w);
        paths.push(Path {
            gain_mm: p_mm,
            gain_sub6: p_sub6 * 10f64.powf(jitter_db / 20.0),
            aod_az: s_az,
            aod_el: -(dh / s_d).atan(),
            delay_s: paths[0].delay_s + extra,
            arrival_az,
            arrival_el: 0.0,
            los: false,
        });
    }

    // Power split: LOS carries K/(K+1) unless blocked, in which case the
    // scattered paths share all of it.
    let large_scale = (profile.reference_distance_m / distance).powf(profile.path_loss_exponent);
    let scattered_total: f64 = weights[1..].iter().sum();
    let (los_power, scattered_power) = if blocked || config.n_paths == 1 {
        (if config.n_paths == 1 && !blocked { 1.0 } else { 0.0 }, 1.0)
    } else {
        (k_lin / (k_lin + 1.0), 1.0 / (k_lin + 1.0))
    };
    {
        let amp = (large_scale * los_power).sqrt();
        let los = &mut paths[0];
        los.los = !blocked;
        los.gain_mm = los_phase_mm * amp;
        los.gain_sub6 = los_phase_sub6 * (amp * 10f64.powf(los_jitter_db / 20.0));
    }
    for (p, w) in paths.iter_mut().zip(&weights).skip(1) {
        let amp = (large_scale * scattered_power * w / scattered_total).sqrt();
        p.gain_mm *= amp;
        p.gain_sub6 *= amp;
    }

    Geometry {
        bs_index,
        bs_position,
        user_position,
        velocity_kmh,
        heading,
        los: !blocked,
        scene: scene_of(config, sample_index),
        seed,
        paths,
    }
}

fn los_path(distance: f64, az: f64, dh: f64, user: [f64; 2], bs: [f64; 2]) -> Path {
    let to_bs = [bs[0] - user[0], bs[1] - user[1]];
    Path {
        gain_mm: C64::new(0.0, 0.0),
        gain_sub6: C64::new(0.0, 0.0),
        aod_az: az,
        aod_el: -(dh / distance).atan(),
        delay_s: (distance * distance + dh * dh).sqrt() / SPEED_OF_LIGHT,
        arrival_az: to_bs[1].atan2(to_bs[0]),
        arrival_el: (dh / distance).atan(),
        los: true,
    }
}

impl Geometry {
    pub fn velocity_mps(&self) -> f64 {
        self.velocity_kmh / 3.6
    }

    /// Per-path Doppler shift at `carrier_hz`: f_max · cos of the angle between
    /// the direction of travel and the arrival direction.
    pub fn doppler_hz(&self, carrier_hz: f64) -> Vec<f64> {
        let f_max = self.velocity_mps() * carrier_hz / SPEED_OF_LIGHT;
        self.paths
            .iter()
            .map(|p| f_max * p.arrival_el.cos() * (p.arrival_az - self.heading).cos())
            .collect()
    }

    /// Moves the user along its heading for `dt` seconds and re-derives the
    /// line-of-sight angles and delay. Scatterers are static, so scattered
    /// departure angles are unchanged. Path phases are not touched; carrier
    /// phase rotation is applied separately by `apply_doppler`.
    pub fn advanced(&self, dt: f64, config: &ScenarioConfig) -> Geometry {
        let step = self.velocity_mps() * dt;
        if step == 0.0 {
            return self.clone();
        }
        let profile = config.profile();
        let dh = profile.bs_height_m - profile.ue_height_m;
        let mut next = self.clone();
        next.user_position = [
            self.user_position[0] + step * self.heading.cos(),
            self.user_position[1] + step * self.heading.sin(),
        ];
        let dx = next.user_position[0] - self.bs_position[0];
        let dy = next.user_position[1] - self.bs_position[1];
        let distance = (dx * dx + dy * dy).sqrt();
        let moved = los_path(distance, dx.atan2(dy), dh, next.user_position, self.bs_position);
        let delta_delay = moved.delay_s - self.paths[0].delay_s;
        for (i, p) in next.paths.iter_mut().enumerate() {
            if i == 0 {
                p.aod_az = moved.aod_az;
                p.aod_el = moved.aod_el;
                p.arrival_az = moved.arrival_az;
                p.arrival_el = moved.arrival_el;
            }
            p.delay_s += delta_delay;
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chansim::Scenario;

    #[test]
    fn deterministic_per_index() {
        let c = ScenarioConfig::new(Scenario::Urban);
        assert_eq!(sample_geometry(&c, 17), sample_geometry(&c, 17));
        assert_ne!(sample_geometry(&c, 17), sample_geometry(&c, 18));
    }

    #[test]
    fn exact_path_count_and_los_without_blockage() {
        let mut c = ScenarioConfig::new(Scenario::Urban);
        c.blockage_prob = 0.0;
        for i in 0..200 {
            let g = sample_geometry(&c, i);
            assert_eq!(g.paths.len(), 5);
            assert!(g.los && g.paths[0].los && g.paths[0].gain_mm.norm() > 0.0);
        }
    }

    #[test]
    fn blockage_suppresses_los_and_keeps_power() {
        let mut c = ScenarioConfig::new(Scenario::Urban);
        c.blockage_prob = 1.0;
        let g = sample_geometry(&c, 3);
        assert!(!g.los);
        assert_eq!(g.paths.len(), 5);
        assert_eq!(g.paths[0].gain_mm.norm(), 0.0);
        let p = c.profile();
        let d = ((g.user_position[0] - g.bs_position[0]).powi(2) + g.user_position[1].powi(2)).sqrt();
        let expected = (p.reference_distance_m / d).powf(p.path_loss_exponent);
        let total: f64 = g.paths.iter().map(|p| p.gain_mm.norm_sqr()).sum();
        assert!((total - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn forced_kinematics_keep_other_draws() {
        let c = ScenarioConfig::new(Scenario::Highway);
        let a = sample_geometry(&c, 5);
        let b = sample_geometry_at(
            &c,
            5,
            Kinematics {
                velocity_kmh: Some(120.0),
                distance_m: None,
            },
        );
        assert_eq!(b.velocity_kmh, 120.0);
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.user_position, b.user_position);
    }

    #[test]
    fn doppler_bounded_by_maximum_shift() {
        let c = ScenarioConfig::new(Scenario::Highway);
        for i in 0..100 {
            let g = sample_geometry(&c, i);
            let f_max = g.velocity_mps() * c.carrier_freq_mmwave / SPEED_OF_LIGHT;
            for f in g.doppler_hz(c.carrier_freq_mmwave) {
                assert!(f.abs() <= f_max * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn zero_step_advance_is_identity() {
        let c = ScenarioConfig::new(Scenario::Urban);
        let mut g = sample_geometry(&c, 9);
        g.velocity_kmh = 0.0;
        assert_eq!(g.advanced(0.01, &c), g);
        let g = sample_geometry(&c, 9);
        assert_eq!(g.advanced(0.0, &c), g);
    }
}
