//! Config file and the flag-over-config merge.
//!
//! ```toml
//! seed = 7
//! components = 3
//! lambda = 0.5
//! tau = 0.3
//! propagate_upstream = false
//!
//! [per_token_weight]
//! 4 = 0.25
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use heart_core::edit::EditPlan;
use heart_core::probes::MAGNITUDE_SCALES;
use serde::Deserialize;

use crate::args::PlanArgs;
use crate::error::{flag, CliError};

pub const DEFAULT_COMPONENTS: usize = 2;
pub const DEFAULT_NN_K: usize = 10;
pub const DEFAULT_TOTAL_STEPS: usize = 30;

/// Settings that can come from the config file. Anything absent falls back
/// to the flag, then to the library default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    /// moVMF components for `fit`.
    pub components: Option<usize>,
    /// Neighbours for `probe nn`.
    pub k: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub total_steps: Option<usize>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub inject_fraction: Option<f64>,
    #[serde(default)]
    pub per_token_weight: BTreeMap<String, f64>,
    pub edit_eot: Option<bool>,
    pub edit_pad: Option<bool>,
    pub propagate_downstream: Option<bool>,
    pub propagate_upstream: Option<bool>,
    pub eot_strength: Option<f64>,
    pub pad_strength: Option<f64>,
}

impl CliConfig {
    pub fn load(op: &'static str, path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(op, path, e.to_string()))?;
        Self::parse(&text).map_err(|e| CliError::io(op, path, e))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn components(&self, op: &'static str, flag: Option<usize>) -> Result<usize, CliError> {
        let k = flag.or(self.components).unwrap_or(DEFAULT_COMPONENTS);
        positive(op, "--components", k)
    }

    pub fn nn_k(&self, op: &'static str, flag: Option<usize>) -> Result<usize, CliError> {
        positive(op, "-k", flag.or(self.k).unwrap_or(DEFAULT_NN_K))
    }

    pub fn total_steps(&self, op: &'static str, flag: Option<usize>) -> Result<usize, CliError> {
        positive(
            op,
            "--total-steps",
            flag.or(self.total_steps).unwrap_or(DEFAULT_TOTAL_STEPS),
        )
    }

    pub fn scales(&self, op: &'static str, flag: Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
        let s = flag
            .or_else(|| self.scales.clone())
            .unwrap_or_else(|| MAGNITUDE_SCALES.to_vec());
        if s.is_empty() {
            return Err(CliError::validation(op, "--scales", "needs at least one factor"));
        }
        if let Some(bad) = s.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(CliError::validation(
                op,
                "--scales",
                format!("factors must be positive, got {bad}"),
            ));
        }
        Ok(s)
    }

    /// Library defaults, overlaid by the config, overlaid by the flags.
    pub fn plan(&self, op: &'static str, flags: &PlanArgs) -> Result<EditPlan, CliError> {
        let mut plan = if flags.local {
            EditPlan::local(1.0)
        } else {
            EditPlan::default()
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if let Some(v) = flags.$field.or(self.$field) {
                    plan.$field = v;
                }
            )*};
        }
        overlay!(lambda, tau, inject_fraction);
        if !flags.local {
            overlay!(edit_eot, edit_pad, propagate_downstream, propagate_upstream);
        }
        plan.eot_strength = flags.eot_strength.or(self.eot_strength);
        plan.pad_strength = flags.pad_strength.or(self.pad_strength);

        for (k, &w) in &self.per_token_weight {
            plan.per_token_weight.insert(position(op, "per_token_weight", k)?, w);
        }
        for spec in &flags.weights {
            let (p, w) = spec
                .split_once('=')
                .ok_or_else(|| CliError::validation(op, "--weight", format!("expected POS=W, got {spec:?}")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| CliError::validation(op, "--weight", format!("bad weight in {spec:?}")))?;
            plan.per_token_weight.insert(position(op, "--weight", p)?, w);
        }
        plan.validate().map_err(|e| match e {
            heart_core::edit::EditError::InvalidPlan { field, reason } => CliError::validation(op, flag(field), reason),
            e => CliError::validation(op, "plan", e.to_string()),
        })?;
        Ok(plan)
    }
}

fn positive(op: &'static str, name: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(CliError::validation(op, name, "must be at least 1"));
    }
    Ok(v)
}

fn position(op: &'static str, name: &str, s: &str) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::validation(op, name, format!("{s:?} is not a token position")))
}
