//! Narrowband snapshot generation: `X = A S + W`.
//!
//! Sources are independent circular complex Gaussian processes and the noise
//! is spatially white with per-sensor variance derived from the SNR. All
//! randomness comes from an explicit [`ChaCha8Rng`] so runs are portable and
//! reproducible from a single `u64` seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::array_model::{channel_matrix, check_angle, ArrayConfig};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// The generator every simulation in the crate draws from.
pub type SimRng = ChaCha8Rng;

/// Source and acquisition parameters of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    angles_deg: Vec<f64>,
    source_powers: Vec<f64>,
    snr_db: f64,
    snapshots: usize,
    seed: u64,
}

impl Scenario {
    /// Unit-power sources. Angles are sorted ascending.
    pub fn new(angles_deg: &[f64], snr_db: f64, snapshots: usize, seed: u64) -> Result<Self> {
        Self::with_powers(
            angles_deg,
            &vec![1.0; angles_deg.len()],
            snr_db,
            snapshots,
            seed,
        )
    }

    /// Angles are sorted ascending and the powers permuted along with them.
    pub fn with_powers(
        angles_deg: &[f64],
        source_powers: &[f64],
        snr_db: f64,
        snapshots: usize,
        seed: u64,
    ) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::Scenario("at least one source is required".into()));
        }
        if source_powers.len() != angles_deg.len() {
            return Err(Error::LengthMismatch(format!(
                "{} angles but {} source powers",
                angles_deg.len(),
                source_powers.len()
            )));
        }
        if snapshots == 0 {
            return Err(Error::Scenario("snapshot count must be positive".into()));
        }
        if snr_db.is_nan() {
            return Err(Error::Scenario("SNR is NaN".into()));
        }
        for &p in source_powers {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::Scenario(format!(
                    "source powers must be positive and finite, got {p}"
                )));
            }
        }
        for &a in angles_deg {
            check_angle(a)?;
        }
        let mut pairs: Vec<(f64, f64)> = angles_deg
            .iter()
            .copied()
            .zip(source_powers.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DegenerateScenario(format!(
                "angle {} deg appears more than once",
                w[0].0
            )));
        }
        Ok(Self {
            angles_deg: pairs.iter().map(|p| p.0).collect(),
            source_powers: pairs.iter().map(|p| p.1).collect(),
            snr_db,
            snapshots,
            seed,
        })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn source_powers(&self) -> &[f64] {
        &self.source_powers
    }

    pub fn sources(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn snapshots(&self) -> usize {
        self.snapshots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-sensor noise variance implied by the SNR (reference power 1 W).
    pub fn noise_variance(&self) -> f64 {
        noise_variance_from_snr(self.snr_db, 1.0)
    }

    /// Same scenario at another SNR.
    pub fn with_snr(&self, snr_db: f64) -> Self {
        Self {
            snr_db,
            ..self.clone()
        }
    }

    /// Same scenario with another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Received data, N sensors by K snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    samples: CMatrix,
}

impl SnapshotBlock {
    pub fn new(samples: CMatrix) -> Result<Self> {
        if samples
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Numerical(
                "snapshot block has non-finite entries".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &CMatrix {
        &self.samples
    }

    pub fn sensors(&self) -> usize {
        self.samples.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.samples.ncols()
    }
}

/// `sigma^2 = reference_power * 10^(-snr_db / 10)`; `+inf` dB gives zero.
pub fn noise_variance_from_snr(snr_db: f64, reference_power: f64) -> f64 {
    reference_power * 10f64.powf(-snr_db / 10.0)
}

/// Seed of Monte Carlo trial `trial`, salted per SNR point:
/// `mix(base) ^ (trial + salt)`.
///
/// The base is passed through the SplitMix64 finalizer first; a raw
/// `base ^ trial` maps nearby bases onto permutations of the same seed set.
pub fn derive_seed(base: u64, trial: usize, salt: u64) -> u64 {
    mix_seed(base) ^ (trial as u64).wrapping_add(salt)
}

fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circular complex Gaussian sample with `E|z|^2 = variance`.
fn complex_gaussian(rng: &mut SimRng, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(scale * re, scale * im)
}

/// P x K source waveforms, row `i` with power `powers[i]`.
///
/// Draw order is snapshot-major (all sources at t=0, then t=1, ...).
pub fn generate_sources(p: usize, k: usize, powers: &[f64], rng: &mut SimRng) -> Result<CMatrix> {
    if powers.len() != p {
        return Err(Error::LengthMismatch(format!(
            "{p} sources but {} powers",
            powers.len()
        )));
    }
    if let Some(bad) = powers.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::Scenario(format!(
            "source power must be positive, got {bad}"
        )));
    }
    let mut s = CMatrix::zeros(p, k);
    for t in 0..k {
        for (i, &w) in powers.iter().enumerate() {
            s[(i, t)] = complex_gaussian(rng, w);
        }
    }
    Ok(s)
}

/// Simulate `X = A S + W` for the scenario, seeded from `scenario.seed()`.
pub fn simulate_snapshots(config: &ArrayConfig, scenario: &Scenario) -> Result<SnapshotBlock> {
    let mut rng = SimRng::seed_from_u64(scenario.seed);
    simulate_with_rng(config, scenario, &mut rng)
}

/// As [`simulate_snapshots`], drawing from a caller-owned generator.
pub fn simulate_with_rng(
    config: &ArrayConfig,
    scenario: &Scenario,
    rng: &mut SimRng,
) -> Result<SnapshotBlock> {
    let n = config.sensors();
    let p = scenario.sources();
    if p >= n {
        return Err(Error::Scenario(format!(
            "{p} sources need more than {p} sensors, array has {n}"
        )));
    }
    let a = channel_matrix(config, &scenario.angles_deg)?;
    let k = scenario.snapshots;
    let s = generate_sources(p, k, &scenario.source_powers, rng)?;
    let mut x = a.entries() * s;
    let sigma2 = scenario.noise_variance();
    if sigma2 > 0.0 {
        for t in 0..k {
            for r in 0..n {
                x[(r, t)] += complex_gaussian(rng, sigma2);
            }
        }
    }
    SnapshotBlock::new(x)
}
