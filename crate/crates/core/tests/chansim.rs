use std::f64::consts::{PI, TAU};

use beamnet_core::beamspace::build_codebook;
use beamnet_core::chansim::{
    aged_channel, apply_doppler, assemble_features, generate_dataset, path_components, rotate_paths, sample_geometry,
    steering_vector, synthesize_channel, AntennaDims, Band, Geometry, Path, Scenario, ScenarioConfig,
};
use beamnet_core::exec::Sequential;
use beamnet_core::linalg::{CMatrix, C64};
use proptest::prelude::*;

fn path(gain: C64, az: f64, el: f64, delay: f64) -> Path {
    Path {
        gain_mm: gain,
        gain_sub6: gain,
        aod_az: az,
        aod_el: el,
        delay_s: delay,
        arrival_az: 0.0,
        arrival_el: 0.0,
        los: false,
    }
}

fn geometry(paths: Vec<Path>) -> Geometry {
    Geometry {
        bs_index: 0,
        bs_position: [0.0, 0.0],
        user_position: [0.0, 50.0],
        velocity_kmh: 0.0,
        heading: 0.0,
        los: true,
        scene: 0,
        seed: 0,
        paths,
    }
}

#[test]
fn two_path_four_element_channel_matches_hand_sum() {
    let mut cfg = ScenarioConfig::new(Scenario::Urban);
    cfg.sub6_antenna = AntennaDims::new(1, 4, 1);
    cfg.sub6_subcarriers = 3;
    let (g1, g2) = (C64::new(0.8, -0.1), C64::new(-0.2, 0.3));
    let (az1, az2) = (0.4, -0.9);
    let (t1, t2) = (120e-9, 310e-9);
    let geo = geometry(vec![path(g1, az1, 0.0, t1), path(g2, az2, 0.0, t2)]);
    let h = synthesize_channel(&geo, Band::Sub6, &cfg);
    let df = cfg.bandwidth_sub6 / 3.0;
    for e in 0..4 {
        for c in 0..3 {
            // Half-wavelength spacing: element phase π·e·sin(az).
            let term = |g: C64, az: f64, tau: f64| {
                g * C64::from_polar(1.0, PI * e as f64 * f64::sin(az)) * C64::from_polar(1.0, -TAU * c as f64 * df * tau)
            };
            let want = term(g1, az1, t1) + term(g2, az2, t2);
            assert!((h.get(e, c) - want).norm() < 1e-12, "e={e} c={c}");
        }
    }
}

#[test]
fn steering_vectors_have_unit_modulus() {
    for (az, el) in [(0.0, 0.0), (0.7, -0.3), (-1.4, -0.9), (1.57, 0.2)] {
        for a in steering_vector(AntennaDims::new(1, 32, 8), 0.5, az, el) {
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn blockage_rate_converges() {
    for s in [Scenario::Urban, Scenario::Rural, Scenario::Highway] {
        let cfg = ScenarioConfig::new(s);
        let n = 10_000;
        let blocked = (0..n).filter(|&i| !sample_geometry(&cfg, i).los).count();
        let rate = blocked as f64 / n as f64;
        assert!((rate - cfg.blockage_prob).abs() < 0.02, "{s:?}: {rate}");
    }
    let mut cfg = ScenarioConfig::new(Scenario::Urban);
    cfg.blockage_prob = 0.0;
    for i in 0..200 {
        let g = sample_geometry(&cfg, i);
        assert!(g.los && g.paths.iter().any(|p| p.los));
    }
}

#[test]
fn geometry_is_seeded_and_has_n_paths() {
    let cfg = ScenarioConfig::new(Scenario::Highway);
    for i in [0, 7, 4321] {
        let a = sample_geometry(&cfg, i);
        assert_eq!(a, sample_geometry(&cfg, i));
        assert_eq!(a.paths.len(), cfg.n_paths);
    }
    let mut other = cfg.clone();
    other.base_seed = 1;
    assert_ne!(sample_geometry(&cfg, 3), sample_geometry(&other, 3));
}

#[test]
fn doppler_identities() {
    let cfg = ScenarioConfig::new(Scenario::Urban);
    for i in 0..20 {
        let mut g = sample_geometry(&cfg, i);
        let comps = path_components(&g, Band::MmWave, &cfg);
        let h = synthesize_channel(&g, Band::MmWave, &cfg);
        let f = g.doppler_hz(cfg.carrier_freq_mmwave);
        assert_eq!(apply_doppler(&h, &f, &comps, 0.0).unwrap(), h);
        g.velocity_kmh = 0.0;
        let f0 = g.doppler_hz(cfg.carrier_freq_mmwave);
        assert!(f0.iter().all(|&x| x == 0.0));
        assert_eq!(apply_doppler(&h, &f0, &comps, 0.01).unwrap(), h);
        assert_eq!(aged_channel(&g, Band::MmWave, &cfg, 0.01).unwrap(), h);
    }
}

#[test]
fn aging_single_path_is_a_pure_rotation() {
    let cfg = ScenarioConfig::new(Scenario::Urban);
    let mut g = geometry(vec![path(C64::new(0.5, 0.5), 0.2, -0.1, 1e-7)]);
    g.velocity_kmh = 90.0;
    g.paths[0].arrival_az = 0.3;
    let comps = path_components(&g, Band::MmWave, &cfg);
    let h = synthesize_channel(&g, Band::MmWave, &cfg);
    let f = g.doppler_hz(cfg.carrier_freq_mmwave);
    let dt = 1e-3;
    let aged = apply_doppler(&h, &f, &comps, dt).unwrap();
    let rot = C64::from_polar(1.0, TAU * f[0] * dt);
    for (a, b) in aged.as_slice().iter().zip(h.as_slice()) {
        assert!((a - b * rot).norm() < 1e-12);
    }
    let r = rotate_paths(&g, &f, &f, dt);
    assert!((r.paths[0].gain_mm.norm() - g.paths[0].gain_mm.norm()).abs() < 1e-15);
}

#[test]
fn dataset_generation_is_deterministic() {
    let mut cfg = ScenarioConfig::new(Scenario::Rural);
    cfg.n_users = 12;
    let a = generate_dataset(&cfg, &Sequential).unwrap();
    let b = generate_dataset(&cfg, &Sequential).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.targets, b.targets);
    assert_eq!(a.norm_meta, b.norm_meta);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.h_mm, y.h_mm);
        assert_eq!(x.oracle_beam, y.oracle_beam);
    }
}

fn random_pair(seed: u64) -> (CMatrix, CMatrix) {
    let cfg = ScenarioConfig::new(Scenario::Urban);
    let g = sample_geometry(&cfg, seed as usize);
    (
        synthesize_channel(&g, Band::Sub6, &cfg),
        synthesize_channel(&g, Band::MmWave, &cfg),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Path loss and the carrier phase of each band never reach the features.
    #[test]
    fn features_ignore_common_gain_and_phase(seed in 0u64..5000, a in 0.01f64..100.0, p1 in 0.0f64..core::f64::consts::TAU, p2 in 0.0f64..core::f64::consts::TAU) {
        let cb = build_codebook(32, 8, 2);
        let (hs, hm) = random_pair(seed);
        let base = assemble_features(&hs, &hm, &cb);
        let moved = assemble_features(
            &hs.scaled(C64::from_polar(a, p1)),
            &hm.scaled(C64::from_polar(a, p2)),
            &cb,
        );
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn features_keep_the_band_power_ratio(seed in 0u64..5000, gain in 0.1f64..10.0) {
        let cb = build_codebook(32, 8, 2);
        let (hs, hm) = random_pair(seed);
        let base = assemble_features(&hs, &hm, &cb);
        let boosted = assemble_features(&hs, &hm.scaled(C64::new(gain, 0.0)), &cb);
        let len = base.len() / 2;
        for i in 256..len {
            for j in [i, len + i] {
                prop_assert!((boosted[j] - gain * base[j]).abs() < 1e-9 * (1.0 + boosted[j].abs()));
            }
        }
    }
}
