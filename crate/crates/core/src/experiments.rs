//! Monte Carlo harness: averaged spectra, RMSE against SNR and correlation
//! between spectra.
//!
//! Trial `t` at SNR-grid index `s` is seeded with
//! `mix(base_seed) ^ (t + (s << 32))` (see [`derive_seed`]), so every trial is an independent work unit.
//! Trials run on the rayon pool and are reduced in index order, which keeps
//! results bit-identical regardless of thread count.

use rayon::prelude::*;

use crate::array_model::ArrayConfig;
use crate::covariance::{sample_covariance, CovarianceEstimate};
use crate::error::{Error, Result};
use crate::estimators::{AngularSpectrum, DoaEstimate, GridSpec};
use crate::method::MethodId;
use crate::synthesis::{derive_seed, simulate_snapshots, Scenario};

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub config: ArrayConfig,
    pub scenario: Scenario,
    pub methods: Vec<MethodId>,
    pub trials: usize,
    pub snr_grid_db: Option<Vec<f64>>,
    pub grid: GridSpec,
    /// Skip (and count) trials whose estimator fails instead of aborting.
    pub tolerate_failures: bool,
    /// Overrides the default pseudo-inverse cutoff of sample covariances.
    pub pinv_rel_tol: Option<f64>,
}

impl ExperimentPlan {
    pub fn new(
        config: ArrayConfig,
        scenario: Scenario,
        methods: Vec<MethodId>,
        trials: usize,
    ) -> Result<Self> {
        let plan = Self {
            config,
            scenario,
            methods,
            trials,
            snr_grid_db: None,
            grid: GridSpec::default(),
            tolerate_failures: false,
            pinv_rel_tol: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_snr_grid(mut self, snr_grid_db: Vec<f64>) -> Result<Self> {
        self.snr_grid_db = Some(snr_grid_db);
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        self.grid = grid;
        Ok(self)
    }

    pub fn with_trials(mut self, trials: usize) -> Result<Self> {
        self.trials = trials;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        let (n, p) = (self.config.sensors(), self.scenario.sources());
        if p >= n {
            return Err(Error::Scenario(format!(
                "{p} sources need more than {n} sensors"
            )));
        }
        for m in &self.methods {
            m.validate(n, p)?;
        }
        if let Some(g) = &self.snr_grid_db {
            if g.is_empty() {
                return Err(Error::Config("SNR grid is empty".into()));
            }
            if g.iter().any(|v| v.is_nan()) || g.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Config("SNR grid must be strictly increasing".into()));
            }
        }
        self.grid.validate()
    }

    /// Sample covariance of trial `trial` for `scenario`, salted by `salt`.
    pub fn trial_covariance(
        &self,
        scenario: &Scenario,
        trial: usize,
        salt: u64,
    ) -> Result<CovarianceEstimate> {
        let seeded = scenario.with_seed(derive_seed(scenario.seed(), trial, salt));
        let x = simulate_snapshots(&self.config, &seeded)?;
        let cov = sample_covariance(&x)?;
        Ok(match self.pinv_rel_tol {
            Some(tol) => cov.with_pinv_tolerance(tol),
            None => cov,
        })
    }
}

fn snr_salt(index: usize) -> u64 {
    (index as u64) << 32
}

/// RMSE over all trials and sources, pairing sorted estimates with sorted
/// truth.
pub fn rmse(estimates: &[DoaEstimate], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Empty("estimate list"));
    }
    let mut truth = truth.to_vec();
    truth.sort_by(|a, b| a.total_cmp(b));
    let mut sum = 0.0;
    for est in estimates {
        let got = est.angles_deg();
        if got.len() != truth.len() {
            return Err(Error::LengthMismatch(format!(
                "estimate has {} angles, truth has {}",
                got.len(),
                truth.len()
            )));
        }
        sum += got
            .iter()
            .zip(&truth)
            .map(|(g, t)| (g - t) * (g - t))
            .sum::<f64>();
    }
    Ok((sum / (estimates.len() * truth.len()) as f64).sqrt())
}

/// Spectra averaged over the same set of trials.
#[derive(Debug, Clone)]
pub struct AveragedSpectra {
    pub spectra: Vec<AngularSpectrum>,
    /// Trials skipped in tolerate-failures mode.
    pub failed_trials: Vec<usize>,
}

/// Average the spectra of several methods over the plan's trials at the
/// scenario SNR. All methods see the same snapshots in each trial.
pub fn averaged_spectra(plan: &ExperimentPlan, methods: &[MethodId]) -> Result<AveragedSpectra> {
    plan.validate()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let (n, p) = (plan.config.sensors(), plan.scenario.sources());
    for m in methods {
        m.validate(n, p)?;
        if !m.is_spectral() {
            return Err(Error::Applicability(format!("{m} has no angular spectrum")));
        }
    }
    let per_trial: Vec<Result<Vec<AngularSpectrum>>> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let cov = plan.trial_covariance(&plan.scenario, t, snr_salt(0))?;
            methods
                .iter()
                .map(|m| m.spectrum(&cov, p, &plan.config, &plan.grid))
                .collect()
        })
        .collect();

    let grid = plan.grid.points();
    let mut sums = vec![vec![0.0; grid.len()]; methods.len()];
    let mut used = 0usize;
    let mut failed_trials = Vec::new();
    for (t, result) in per_trial.into_iter().enumerate() {
        match result {
            Ok(spectra) => {
                for (acc, s) in sums.iter_mut().zip(&spectra) {
                    for (a, v) in acc.iter_mut().zip(s.values()) {
                        *a += v;
                    }
                }
                used += 1;
            }
            Err(e) if plan.tolerate_failures && e.is_numerical() => failed_trials.push(t),
            Err(e) => {
                return Err(Error::TrialFailed {
                    trial: t,
                    source: Box::new(e),
                })
            }
        }
    }
    if used == 0 {
        return Err(Error::Numerical("every trial failed".into()));
    }
    let spectra = sums
        .into_iter()
        .zip(methods)
        .map(|(acc, m)| {
            let values = acc.into_iter().map(|v| v / used as f64).collect();
            AngularSpectrum::new(grid.clone(), values, m.to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragedSpectra {
        spectra,
        failed_trials,
    })
}

/// Mean spectrum of one method over the plan's trials.
pub fn averaged_spectrum(plan: &ExperimentPlan, method: MethodId) -> Result<AngularSpectrum> {
    let mut avg = averaged_spectra(plan, &[method])?;
    Ok(avg.spectra.remove(0))
}

/// RMSE (degrees) per method at each SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseCurve {
    pub snr_db: Vec<f64>,
    pub methods: Vec<MethodId>,
    /// `rmse_deg[method][snr]`.
    pub rmse_deg: Vec<Vec<f64>>,
    /// `failed_trials[method][snr]`: trials skipped in tolerate mode.
    pub failed_trials: Vec<Vec<usize>>,
}

impl RmseCurve {
    pub fn curve(&self, method: &MethodId) -> Option<&[f64]> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|i| self.rmse_deg[i].as_slice())
    }
}

/// For each SNR and method: run the plan's trials, estimate (peaks or
/// ESPRIT) and aggregate the RMSE.
pub fn rmse_vs_snr(plan: &ExperimentPlan) -> Result<RmseCurve> {
    plan.validate()?;
    let snrs = plan
        .snr_grid_db
        .clone()
        .ok_or_else(|| Error::Config("plan has no SNR grid".into()))?;
    if plan.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let p = plan.scenario.sources();
    let truth = plan.scenario.angles_deg();
    let n_methods = plan.methods.len();
    let mut rmse_deg = vec![Vec::with_capacity(snrs.len()); n_methods];
    let mut failed = vec![Vec::with_capacity(snrs.len()); n_methods];

    for (s_idx, &snr) in snrs.iter().enumerate() {
        let scenario = plan.scenario.with_snr(snr);
        let per_trial: Vec<Result<Vec<Result<DoaEstimate>>>> = (0..plan.trials)
            .into_par_iter()
            .map(|t| {
                let cov = plan.trial_covariance(&scenario, t, snr_salt(s_idx))?;
                Ok(plan
                    .methods
                    .iter()
                    .map(|m| m.estimate(&cov, p, &plan.config, &plan.grid))
                    .collect())
            })
            .collect();

        let mut estimates: Vec<Vec<DoaEstimate>> = vec![Vec::new(); n_methods];
        let mut skipped = vec![0usize; n_methods];
        for (t, trial) in per_trial.into_iter().enumerate() {
            let wrap = |e: Error| Error::TrialFailed {
                trial: t,
                source: Box::new(e),
            };
            let results = trial.map_err(wrap)?;
            for (m_idx, r) in results.into_iter().enumerate() {
                match r {
                    Ok(est) => estimates[m_idx].push(est),
                    Err(e) if plan.tolerate_failures && e.is_numerical() => skipped[m_idx] += 1,
                    Err(e) => return Err(wrap(e)),
                }
            }
        }
        for m_idx in 0..n_methods {
            if estimates[m_idx].is_empty() {
                return Err(Error::Numerical(format!(
                    "{} failed in every trial at {snr} dB",
                    plan.methods[m_idx]
                )));
            }
            rmse_deg[m_idx].push(rmse(&estimates[m_idx], truth)?);
            failed[m_idx].push(skipped[m_idx]);
        }
    }
    Ok(RmseCurve {
        snr_db: snrs,
        methods: plan.methods.clone(),
        rmse_deg,
        failed_trials: failed,
    })
}

/// Pearson correlation between spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub method_ids: Vec<String>,
    /// Row-major M x M.
    pub entries: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a][b]
    }

    /// Entry for a pair of method identifiers.
    pub fn between(&self, a: &str, b: &str) -> Option<f64> {
        let ia = self.method_ids.iter().position(|m| m == a)?;
        let ib = self.method_ids.iter().position(|m| m == b)?;
        Some(self.entries[ia][ib])
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Correlation matrix of spectra sharing one grid. The diagonal is exactly
/// one and the matrix exactly symmetric.
pub fn spectrum_correlation(spectra: &[AngularSpectrum]) -> Result<CorrelationMatrix> {
    let first = spectra.first().ok_or(Error::Empty("spectrum list"))?;
    for s in spectra {
        if s.grid_deg() != first.grid_deg() {
            return Err(Error::LengthMismatch(format!(
                "spectrum `{}` is on a different grid than `{}`",
                s.method_id(),
                first.method_id()
            )));
        }
        let v = s.values();
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::UndefinedCorrelation(s.method_id().to_string()));
        }
    }
    let m = spectra.len();
    let mut entries = vec![vec![0.0; m]; m];
    for a in 0..m {
        entries[a][a] = 1.0;
        for b in a + 1..m {
            let r = pearson(spectra[a].values(), spectra[b].values());
            entries[a][b] = r;
            entries[b][a] = r;
        }
    }
    Ok(CorrelationMatrix {
        method_ids: spectra.iter().map(|s| s.method_id().to_string()).collect(),
        entries,
    })
}
