//! Rule-based evaluation metrics.

mod errors;
mod overlap;
mod recall;
mod svc;

pub use errors::{rotation_error, translation_error};
pub use overlap::{overlap_ratio, overlap_ratio_indexed, truncated_chamfer, truncated_chamfer_indexed};
pub use recall::{
    inlier_count, is_success, registration_recall, top_m_rr, PairResult, SuccessThreshold,
};
pub use svc::{svc_check, FreeSpaceGrid, SvcConfig};

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Median (average of the two middle values for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Sum of non-negative terms, independent of their order.
pub(crate) fn order_free_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}
