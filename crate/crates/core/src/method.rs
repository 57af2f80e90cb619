//! Method identifiers shared by the experiment harness and the CLI.
//!
//! Grammar: `psi:<n>:<i>` (extended propagator), `prop`, `prop-q1`,
//! `prop-q2`, `music`, `esprit` or `esprit:<m>`.

use std::fmt;
use std::str::FromStr;

use crate::array_model::ArrayConfig;
use crate::covariance::{make_partition, CovarianceEstimate};
use crate::error::{Error, Result};
use crate::estimators::{
    esprit, find_peaks, music_spectrum, spectrum_from_matrix, AngularSpectrum, DoaEstimate,
    GridSpec,
};
use crate::propagators::{
    extended_propagator, propagator_q1, propagator_q2, standard_propagator, KStrategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodId {
    Psi { order: usize, block: usize },
    Prop,
    PropQ1,
    PropQ2,
    Music,
    Esprit { subarray: Option<usize> },
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodId::Psi { order, block } => write!(f, "psi:{order}:{block}"),
            MethodId::Prop => f.write_str("prop"),
            MethodId::PropQ1 => f.write_str("prop-q1"),
            MethodId::PropQ2 => f.write_str("prop-q2"),
            MethodId::Music => f.write_str("music"),
            MethodId::Esprit { subarray: None } => f.write_str("esprit"),
            MethodId::Esprit { subarray: Some(m) } => write!(f, "esprit:{m}"),
        }
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMethod(s.to_string());
        let num = |t: &str| -> Result<usize> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse().map_err(|_| bad())
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["prop"] => Ok(MethodId::Prop),
            ["prop-q1"] => Ok(MethodId::PropQ1),
            ["prop-q2"] => Ok(MethodId::PropQ2),
            ["music"] => Ok(MethodId::Music),
            ["esprit"] => Ok(MethodId::Esprit { subarray: None }),
            ["esprit", m] => Ok(MethodId::Esprit {
                subarray: Some(num(m)?),
            }),
            ["psi", n, i] => {
                let (order, block) = (num(n)?, num(i)?);
                if order < 2 || block == 0 || block > order {
                    return Err(bad());
                }
                Ok(MethodId::Psi { order, block })
            }
            _ => Err(bad()),
        }
    }
}

/// Parse a comma-separated method list; empty lists are rejected.
pub fn parse_method_list(s: &str) -> Result<Vec<MethodId>> {
    let methods = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(MethodId::from_str)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::Config("method list is empty".into()));
    }
    Ok(methods)
}

impl MethodId {
    /// Whether the method yields an angular spectrum (everything but ESPRIT).
    pub fn is_spectral(&self) -> bool {
        !matches!(self, MethodId::Esprit { .. })
    }

    /// Check the method exists for N sensors and P sources.
    pub fn validate(&self, sensors: usize, sources: usize) -> Result<()> {
        match *self {
            MethodId::Psi { order, .. } => make_partition(sensors, sources, order).map(|_| ()),
            MethodId::PropQ2 if sensors < 2 * sources => Err(Error::Applicability(format!(
                "prop-q2 needs N >= 2P, got N={sensors}, P={sources}"
            ))),
            MethodId::Esprit { subarray: Some(m) } if m < sources || m + 1 > sensors => {
                Err(Error::Domain(format!(
                    "esprit:{m} needs P <= m <= N-1 (P={sources}, N={sensors})"
                )))
            }
            _ if sources == 0 || sources >= sensors => Err(Error::Scenario(format!(
                "need 1 <= P < N, got P={sources}, N={sensors}"
            ))),
            _ => Ok(()),
        }
    }

    /// Angular spectrum of a spectral method.
    pub fn spectrum(
        &self,
        cov: &CovarianceEstimate,
        sources: usize,
        config: &ArrayConfig,
        grid: &GridSpec,
    ) -> Result<AngularSpectrum> {
        let op = match *self {
            MethodId::Music => return music_spectrum(cov, sources, config, grid),
            MethodId::Esprit { .. } => {
                return Err(Error::Applicability(format!(
                    "{self} produces point estimates, not a spectrum"
                )))
            }
            MethodId::Prop => standard_propagator(cov, sources)?,
            MethodId::PropQ1 => propagator_q1(cov, sources)?,
            MethodId::PropQ2 => propagator_q2(cov, sources)?,
            MethodId::Psi { order, block } => {
                let scheme = make_partition(cov.sensors(), sources, order)?;
                extended_propagator(cov, &scheme, block, &KStrategy::cyclic())?
            }
        };
        spectrum_from_matrix(op.entries(), config, grid, self.to_string())
    }

    /// Point estimate: peak picking for spectral methods, ESPRIT otherwise.
    pub fn estimate(
        &self,
        cov: &CovarianceEstimate,
        sources: usize,
        config: &ArrayConfig,
        grid: &GridSpec,
    ) -> Result<DoaEstimate> {
        match *self {
            MethodId::Esprit { subarray } => esprit(cov, sources, config, subarray),
            _ => find_peaks(&self.spectrum(cov, sources, config, grid)?, sources),
        }
    }
}
