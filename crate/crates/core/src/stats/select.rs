//! BIC comparison of vMF, moVMF and Kent fits on one sample.

use serde::{Deserialize, Serialize};
use std::fmt;

use super::kent::{fit_kent_with, KentFitOptions, KentModel};
use super::movmf::{fit_movmf, MovmfConfig, MovmfModel};
use super::vmf::{fit_vmf, VmfModel};
use super::{DirectionalModel, StatsError};
use crate::sphere::Direction;

/// `−2 ln L + k ln N`.
pub fn bic(log_likelihood: f64, k: usize, n: usize) -> f64 {
    -2.0 * log_likelihood + k as f64 * (n as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Vmf,
    Movmf,
    Kent,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Vmf => "vmf",
            ModelTag::Movmf => "movmf",
            ModelTag::Kent => "kent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub model: ModelTag,
    pub log_likelihood: f64,
    pub param_count: usize,
    pub sample_count: usize,
    pub bic: f64,
}

impl Candidate {
    fn new(model: ModelTag, log_likelihood: f64, param_count: usize, sample_count: usize) -> Self {
        Candidate {
            model,
            log_likelihood,
            param_count,
            sample_count,
            bic: bic(log_likelihood, param_count, sample_count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub candidates: Vec<Candidate>,
    /// Candidates that failed to fit, with the reason.
    pub failures: Vec<(ModelTag, String)>,
    pub winner: ModelTag,
    /// `β/κ` of the Kent candidate, when it was fitted.
    pub anisotropy_ratio: Option<f64>,
    pub movmf_k: usize,
}

/// Column names of [`FitReport::csv_record`].
pub const CSV_HEADER: [&str; 6] = [
    "concept",
    "encoder",
    "BIC_vmf",
    "BIC_movmf",
    "BIC_kent",
    "beta_over_kappa",
];

impl FitReport {
    pub fn candidate(&self, tag: ModelTag) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.model == tag)
    }

    /// One CSV row; missing candidates are left empty.
    pub fn csv_record(&self, concept: &str, encoder: &str) -> [String; 6] {
        let b = |t| self.candidate(t).map(|c| format!("{}", c.bic)).unwrap_or_default();
        [
            concept.to_string(),
            encoder.to_string(),
            b(ModelTag::Vmf),
            b(ModelTag::Movmf),
            b(ModelTag::Kent),
            self.anisotropy_ratio.map(|r| format!("{r}")).unwrap_or_default(),
        ]
    }
}

/// The report together with the fitted models.
#[derive(Debug, Clone)]
pub struct Selection {
    pub report: FitReport,
    pub vmf: Option<VmfModel>,
    pub movmf: Option<MovmfModel>,
    pub kent: Option<KentModel>,
}

/// Fits all three families and picks the lowest BIC. Ties go to the model
/// with fewer parameters. A candidate that fails to fit is recorded and
/// left out.
pub fn select_model(samples: &[Direction], movmf_k: usize, seed: u64) -> Result<Selection, StatsError> {
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(Direction::lexicographic_cmp);
    let samples = &sorted[..];
    let cfg = MovmfConfig {
        k: movmf_k,
        seed,
        ..MovmfConfig::default()
    };
    let ((vmf, movmf), kent) = rayon::join(
        || rayon::join(|| fit_vmf(samples), || fit_movmf(samples, &cfg)),
        || fit_kent_with(samples, &KentFitOptions::default()),
    );

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    let mut note = |tag: ModelTag, err: &StatsError| {
        log::warn!("select_model: {tag} fit failed: {err}");
        failures.push((tag, err.to_string()));
    };
    match &vmf {
        Ok(m) => candidates.push(Candidate::new(
            ModelTag::Vmf,
            m.log_likelihood(samples),
            m.param_count(),
            n,
        )),
        Err(e) => note(ModelTag::Vmf, e),
    }
    match &movmf {
        Ok(m) => candidates.push(Candidate::new(
            ModelTag::Movmf,
            m.log_likelihood(samples),
            m.param_count(),
            n,
        )),
        Err(e) => note(ModelTag::Movmf, e),
    }
    match &kent {
        Ok(m) => candidates.push(Candidate::new(
            ModelTag::Kent,
            m.log_likelihood(samples),
            m.param_count(),
            n,
        )),
        Err(e) => note(ModelTag::Kent, e),
    }

    let winner = candidates
        .iter()
        .min_by(|a, b| a.bic.total_cmp(&b.bic).then(a.param_count.cmp(&b.param_count)))
        .ok_or(StatsError::NoCandidate)?
        .model;
    let report = FitReport {
        candidates,
        failures,
        winner,
        anisotropy_ratio: kent.as_ref().ok().map(|k| k.anisotropy_ratio()),
        movmf_k,
    };
    Ok(Selection {
        report,
        vmf: vmf.ok(),
        movmf: movmf.ok(),
        kent: kent.ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::vmf::sample_vmf;

    #[test]
    fn bic_arithmetic() {
        assert_eq!(bic(0.0, 0, 10), 0.0);
        let v = bic(-100.0, 3, 100);
        assert!((v - (200.0 + 3.0 * 100f64.ln())).abs() < 1e-12);
        assert!((v - 213.8155105579643).abs() < 1e-10);
    }

    #[test]
    fn stored_bic_is_recomputable() {
        let m = VmfModel::new(Direction::basis(6, 0), 30.0).unwrap();
        let xs = sample_vmf(&m, 400, 3);
        let sel = select_model(&xs, 2, 1).unwrap();
        for c in &sel.report.candidates {
            assert_eq!(c.bic, bic(c.log_likelihood, c.param_count, c.sample_count));
        }
        let best = sel
            .report
            .candidates
            .iter()
            .map(|c| c.bic)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sel.report.candidate(sel.report.winner).unwrap().bic, best);
    }

    #[test]
    fn parameter_counts() {
        let m = VmfModel::new(Direction::basis(6, 0), 30.0).unwrap();
        let xs = sample_vmf(&m, 400, 3);
        let r = select_model(&xs, 3, 1).unwrap().report;
        assert_eq!(r.candidate(ModelTag::Vmf).unwrap().param_count, 6);
        assert_eq!(r.candidate(ModelTag::Movmf).unwrap().param_count, 3 * 6 + 2);
        assert_eq!(r.candidate(ModelTag::Kent).unwrap().param_count, 3 * 6 - 4);
    }

    #[test]
    fn failed_candidates_are_skipped() {
        // two-dimensional data: Kent is undefined, the others still fit
        let m = VmfModel::new(Direction::basis(2, 0), 10.0).unwrap();
        let xs = sample_vmf(&m, 50, 2);
        let r = select_model(&xs, 2, 0).unwrap().report;
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].0, ModelTag::Kent);
        assert!(r.anisotropy_ratio.is_none());
    }

    #[test]
    fn csv_record_layout() {
        let r = FitReport {
            candidates: vec![Candidate::new(ModelTag::Vmf, -1.0, 2, 10)],
            failures: vec![],
            winner: ModelTag::Vmf,
            anisotropy_ratio: Some(0.1),
            movmf_k: 2,
        };
        let row = r.csv_record("cat", "clip");
        assert_eq!(row[0], "cat");
        assert_eq!(row[3], "");
        assert_eq!(row[5], "0.1");
    }
}
