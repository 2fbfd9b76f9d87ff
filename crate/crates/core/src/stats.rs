//! Paired significance tests for per-subject SNR improvements.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairedTest {
    /// Wilcoxon signed-rank; exact null distribution up to 25 non-zero pairs.
    #[default]
    Wilcoxon,
    TTest,
}

/// Smallest number of pairs accepted.
pub const MIN_PAIRS: usize = 5;

/// Largest non-zero pair count handled by exact enumeration.
pub const EXACT_LIMIT: usize = 25;

/// Two-sided p-value for the hypothesis that `a - b` is centered on zero.
pub fn paired_significance(a: &[f64], b: &[f64]) -> Result<f64> {
    paired_significance_with(a, b, PairedTest::default())
}

pub fn paired_significance_with(a: &[f64], b: &[f64], test: PairedTest) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            inner: a.len(),
            outer: b.len(),
        });
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::InsufficientSamples {
            got: a.len(),
            needed: MIN_PAIRS,
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "deltas",
            reason: "paired samples must be finite".into(),
        });
    }
    Ok(match test {
        PairedTest::Wilcoxon => wilcoxon_signed_rank(&diffs),
        PairedTest::TTest => paired_t(&diffs),
    })
}

/// Signed-rank test on differences; zeros are dropped and ties share ranks.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> f64 {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return 1.0;
    }
    nz.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    // doubled midranks keep everything integral
    let mut ranks2 = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        let doubled = (i + 1 + j + 1) as u64;
        ranks2[i..=j].iter_mut().for_each(|r| *r = doubled);
        i = j + 1;
    }
    let w_plus2: u64 = nz
        .iter()
        .zip(&ranks2)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total2: u64 = ranks2.iter().sum();

    if n <= EXACT_LIMIT {
        // counts[s] = number of sign patterns whose positive doubled-rank sum is s
        let mut counts = vec![0f64; total2 as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let all = 2f64.powi(n as i32);
        let w = w_plus2 as usize;
        let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
        let upper: f64 = counts[w..].iter().sum::<f64>() / all;
        return (2.0 * lower.min(upper)).min(1.0);
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let r: Vec<f64> = ranks2.iter().map(|&r| r as f64 / 2.0).collect();
    let var = r.iter().map(|x| x * x).sum::<f64>() / 4.0;
    if var == 0.0 {
        return 1.0;
    }
    let z = (w_plus2 as f64 / 2.0 - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(-z.abs())).min(1.0)
}

/// Paired Student t-test on differences.
pub fn paired_t(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean == 0.0 { 1.0 } else { 0.0 };
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}
