//! Feature presence metric: how far a feature's frequency among generated
//! images drifts from its frequency in the training data, in percent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|n_gf / n_g - n_tf / n_t| * 100`.
pub fn compute_fpm(n_gf: usize, n_g: usize, n_tf: usize, n_t: usize) -> Result<f64> {
    if n_g == 0 || n_t == 0 {
        return Err(Error::invalid("feature presence needs nonzero sample counts"));
    }
    if n_gf > n_g || n_tf > n_t {
        return Err(Error::invalid(format!(
            "feature counts exceed totals ({n_gf}/{n_g}, {n_tf}/{n_t})"
        )));
    }
    let generated = n_gf as f64 / n_g as f64;
    let train = n_tf as f64 / n_t as f64;
    Ok((generated - train).abs() * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAudit {
    pub feature: String,
    pub n_generated_with: usize,
    pub n_generated: usize,
    pub n_train_with: usize,
    pub n_train: usize,
    pub fpm: f64,
}

impl FeatureAudit {
    pub fn new(feature: impl Into<String>, n_gf: usize, n_g: usize, n_tf: usize, n_t: usize) -> Result<Self> {
        Ok(Self {
            feature: feature.into(),
            n_generated_with: n_gf,
            n_generated: n_g,
            n_train_with: n_tf,
            n_train: n_t,
            fpm: compute_fpm(n_gf, n_g, n_tf, n_t)?,
        })
    }

    pub fn generated_frequency(&self) -> f64 {
        self.n_generated_with as f64 / self.n_generated as f64
    }

    pub fn train_frequency(&self) -> f64 {
        self.n_train_with as f64 / self.n_train as f64
    }
}

/// Per-feature audits plus their arithmetic mean FPM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub features: Vec<FeatureAudit>,
    pub average_fpm: f64,
}

impl AuditReport {
    pub fn new(features: Vec<FeatureAudit>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::invalid("audit has no features"));
        }
        let average_fpm = features.iter().map(|a| a.fpm).sum::<f64>() / features.len() as f64;
        Ok(Self { features, average_fpm })
    }

    pub fn get(&self, feature: &str) -> Option<&FeatureAudit> {
        self.features.iter().find(|a| a.feature == feature)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,n_gf,n_g,n_tf,n_t,fpm\n");
        for a in &self.features {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                a.feature, a.n_generated_with, a.n_generated, a.n_train_with, a.n_train, a.fpm
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit serializes")
    }
}
