//! Feature presence auditing and clustering agreement.

mod classifier;
mod fpm;
mod nmi;

pub use classifier::{ClassifierSettings, PresenceClassifier};
pub use fpm::{compute_fpm, AuditReport, FeatureAudit};
pub use nmi::nmi;

use crate::datasets::LabeledImageSet;
use crate::error::{Error, Result};
use crate::image::ImageBatch;

/// Counts `N_gf` with each classifier on `generated` and `N_tf` from the
/// ground-truth flags of `train_set`.
pub fn audit_features(
    classifiers: &[PresenceClassifier],
    generated: &ImageBatch<f32>,
    train_set: &LabeledImageSet,
) -> Result<AuditReport> {
    if generated.is_empty() {
        return Err(Error::invalid("no generated images to audit"));
    }
    let mut audits = Vec::with_capacity(classifiers.len());
    for clf in classifiers {
        let n_gf = clf.predict(generated)?.into_iter().filter(|&b| b).count();
        let n_tf = train_set.count_with(&clf.feature)?;
        audits.push(FeatureAudit::new(&clf.feature, n_gf, generated.len(), n_tf, train_set.len())?);
    }
    AuditReport::new(audits)
}
