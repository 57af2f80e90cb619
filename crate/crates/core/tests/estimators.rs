//! Estimator behaviour on noiseless and simulated data.

use propdoa::covariance::max_order;
use propdoa::experiments::averaged_spectra;
use propdoa::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THREE_SOURCES: [f64; 3] = [10.0, 21.0, 45.0];

fn all_methods(n: usize, p: usize) -> Vec<MethodId> {
    let mut m: Vec<MethodId> = ["prop", "prop-q1", "prop-q2", "music", "esprit"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    for order in 2..=max_order(n, p) {
        for block in 1..=order {
            m.push(MethodId::Psi { order, block });
        }
    }
    m
}

#[test]
fn every_method_recovers_noiseless_angles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = GridSpec::default();
    for _ in 0..12 {
        let n = rng.random_range(8..=20usize);
        let p = rng.random_range(1..=((n - 1) / 2).min(4));
        let mut th: Vec<f64>;
        loop {
            th = (0..p).map(|_| rng.random_range(-60.0..60.0)).collect();
            th.sort_by(f64::total_cmp);
            if th.windows(2).all(|w| w[1] - w[0] >= 2.0) {
                break;
            }
        }
        let config = ArrayConfig::half_wavelength(n).unwrap();
        let a = channel_matrix(&config, &th).unwrap();
        let cov = theoretical_covariance(&a, &vec![1.0; p], 0.0).unwrap();
        for m in all_methods(n, p) {
            let est = m.estimate(&cov, p, &config, &grid).unwrap();
            let tol = if m.is_spectral() { grid.step } else { 1e-6 };
            for (got, want) in est.angles_deg().iter().zip(&th) {
                assert!(
                    (got - want).abs() <= tol + 1e-9,
                    "{m} N={n} {th:?}: {:?}",
                    est.angles_deg()
                );
            }
        }
    }
}

#[test]
fn noiseless_three_source_peaks_land_on_grid() {
    let config = ArrayConfig::half_wavelength(18).unwrap();
    let cov = theoretical_covariance(
        &channel_matrix(&config, &THREE_SOURCES).unwrap(),
        &[1.0; 3],
        0.0,
    )
    .unwrap();
    for m in all_methods(18, 3).into_iter().filter(MethodId::is_spectral) {
        let est = m.estimate(&cov, 3, &config, &GridSpec::default()).unwrap();
        assert_eq!(est.angles_deg(), &THREE_SOURCES, "{m}");
    }
}

#[test]
fn esprit_ignores_covariance_scale() {
    let config = ArrayConfig::half_wavelength(18).unwrap();
    let sc = Scenario::new(&THREE_SOURCES, 5.0, 200, 3).unwrap();
    let cov = sample_covariance(&simulate_snapshots(&config, &sc).unwrap()).unwrap();
    let base = esprit(&cov, 3, &config, None).unwrap();
    for c in [1e-6, 0.37, 42.0, 1e8] {
        let scaled = esprit(&cov.scaled(c), 3, &config, None).unwrap();
        for (x, y) in base.angles_deg().iter().zip(scaled.angles_deg()) {
            assert!((x - y).abs() < 1e-9, "scale {c}: {x} vs {y}");
        }
    }
}

#[test]
fn esprit_from_snapshots_matches_covariance_route() {
    let config = ArrayConfig::half_wavelength(12).unwrap();
    let sc = Scenario::new(&[-20.0, 5.0], 15.0, 300, 9).unwrap();
    let x = simulate_snapshots(&config, &sc).unwrap();
    let a = esprit(&sample_covariance(&x).unwrap(), 2, &config, None).unwrap();
    let b = propdoa::estimators::esprit_from_snapshots(&x, 2, &config, None).unwrap();
    for (u, v) in a.angles_deg().iter().zip(b.angles_deg()) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn single_noise_vector_still_gives_p_peaks() {
    let config = ArrayConfig::half_wavelength(4).unwrap();
    let th = [-30.0, 0.0, 30.0];
    let cov =
        theoretical_covariance(&channel_matrix(&config, &th).unwrap(), &[1.0; 3], 0.0).unwrap();
    let s = music_spectrum(&cov, 3, &config, &GridSpec::default()).unwrap();
    assert_eq!(find_peaks(&s, 3).unwrap().angles_deg(), &th);
}

#[test]
fn music_resolves_three_sources_at_10_db() {
    let sc = Scenario::new(&THREE_SOURCES, 10.0, 200, 2024).unwrap();
    let plan = ExperimentPlan::new(
        ArrayConfig::half_wavelength(18).unwrap(),
        sc,
        vec![MethodId::Music],
        20,
    )
    .unwrap();
    let s = averaged_spectrum(&plan, MethodId::Music).unwrap();
    for (g, t) in find_peaks(&s, 3)
        .unwrap()
        .angles_deg()
        .iter()
        .zip(THREE_SOURCES)
    {
        assert!((g - t).abs() <= 0.5);
    }
}

#[test]
fn find_peaks_contract() {
    let grid: Vec<f64> = (0..7).map(|i| i as f64).collect();
    let single =
        AngularSpectrum::new(grid.clone(), vec![0.0, 1.0, 2.0, 5.0, 2.0, 1.0, 0.0], "t").unwrap();
    assert_eq!(find_peaks(&single, 1).unwrap().angles_deg(), &[3.0]);
    let plateau =
        AngularSpectrum::new(grid.clone(), vec![0.0, 1.0, 4.0, 4.0, 4.0, 1.0, 0.0], "t").unwrap();
    assert_eq!(find_peaks(&plateau, 1).unwrap().angles_deg(), &[2.0]);
    // One maximum only: the second slot is filled by the highest remaining value.
    let fill = find_peaks(&single, 2).unwrap();
    assert_eq!(fill.angles_deg(), &[2.0, 3.0]);
    assert!(find_peaks(&single, 8).is_err());
}

#[test]
fn averaged_spectra_do_not_depend_on_thread_count() {
    let sc = Scenario::new(&THREE_SOURCES, 5.0, 100, 5).unwrap();
    let methods = vec![MethodId::Psi { order: 4, block: 1 }, MethodId::Music];
    let plan = ExperimentPlan::new(
        ArrayConfig::half_wavelength(18).unwrap(),
        sc,
        methods.clone(),
        6,
    )
    .unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| averaged_spectra(&plan, &methods).unwrap())
    };
    let (one, four) = (run(1), run(4));
    for (a, b) in one.spectra.iter().zip(&four.spectra) {
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn doubling_trials_keeps_psi21_peaks() {
    let sc = Scenario::new(&THREE_SOURCES, 5.0, 200, 2024).unwrap();
    let m = MethodId::Psi { order: 2, block: 1 };
    let plan =
        ExperimentPlan::new(ArrayConfig::half_wavelength(18).unwrap(), sc, vec![m], 25).unwrap();
    let short = find_peaks(&averaged_spectrum(&plan, m).unwrap(), 3).unwrap();
    let long = find_peaks(
        &averaged_spectrum(&plan.clone().with_trials(50).unwrap(), m).unwrap(),
        3,
    )
    .unwrap();
    for (a, b) in short.angles_deg().iter().zip(long.angles_deg()) {
        assert!((a - b).abs() <= 0.1 + 1e-9, "{a} vs {b}");
    }
}

#[test]
fn rmse_vs_snr_is_reproducible() {
    let sc = Scenario::new(&THREE_SOURCES, 0.0, 100, 17).unwrap();
    let plan = ExperimentPlan::new(
        ArrayConfig::half_wavelength(18).unwrap(),
        sc,
        vec![
            MethodId::Psi { order: 4, block: 4 },
            MethodId::Esprit { subarray: None },
        ],
        8,
    )
    .unwrap()
    .with_snr_grid(vec![0.0, 10.0, 20.0])
    .unwrap();
    let a = rmse_vs_snr(&plan).unwrap();
    let b = rmse_vs_snr(&plan).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rmse_deg.len(), 2);
    assert!(a.rmse_deg.iter().all(|c| c.len() == 3));
}

#[test]
fn correlation_of_single_spectrum_is_one() {
    let config = ArrayConfig::half_wavelength(8).unwrap();
    let cov =
        theoretical_covariance(&channel_matrix(&config, &[12.0]).unwrap(), &[1.0], 0.1).unwrap();
    let s = music_spectrum(&cov, 1, &config, &GridSpec::default()).unwrap();
    let c = spectrum_correlation(&[s]).unwrap();
    assert_eq!(c.entries, vec![vec![1.0]]);
}
