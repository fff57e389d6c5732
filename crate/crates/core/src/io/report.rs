//! Metric reports as JSON with fixed field names and six significant digits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounds to six significant digits; non-finite values pass through.
pub fn round_sig6(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub row: usize,
    pub col: usize,
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub l_r: Option<f64>,
    pub l_w: Option<f64>,
    pub l_s: Option<f64>,
    pub l_total: Option<f64>,
    /// The perceptual loss term is not evaluated.
    pub perceptual: String,
    pub per_view: Vec<ViewScore>,
}

impl MetricReport {
    pub fn rounded(&self) -> MetricReport {
        let r = |o: Option<f64>| o.map(round_sig6);
        MetricReport {
            psnr_db: round_sig6(self.psnr_db),
            ssim: round_sig6(self.ssim),
            l_r: r(self.l_r),
            l_w: r(self.l_w),
            l_s: r(self.l_s),
            l_total: r(self.l_total),
            perceptual: self.perceptual.clone(),
            per_view: self
                .per_view
                .iter()
                .map(|v| ViewScore {
                    row: v.row,
                    col: v.col,
                    psnr_db: round_sig6(v.psnr_db),
                    ssim: round_sig6(v.ssim),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rounded()).expect("report serializes") + "\n"
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(round_sig6(35.123456789), 35.1235);
        assert_eq!(round_sig6(0.000123456789), 0.000123457);
        assert_eq!(round_sig6(0.0), 0.0);
        assert_eq!(round_sig6(100.0), 100.0);
    }
}
