//! Benjamini-Hochberg step-up adjusted p-values.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdrError {
    #[error("no p-values to adjust")]
    Empty,
    #[error("p-value {value} at position {index} is outside [0, 1]")]
    OutOfRangeP { index: usize, value: f64 },
}

/// Raw p-values with their BH-adjusted counterparts, aligned by position.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedPValues {
    pub raw: Vec<f64>,
    pub adjusted: Vec<f64>,
}

/// `adjusted_(i) = min(1, min_{j >= i} raw_(j) * m / j)` over the ascending
/// order of `raw`, mapped back to input positions. Tied raw values are
/// ordered by position; the tail minimum gives them one shared value.
pub fn bh_adjust(raw: &[f64]) -> Result<AdjustedPValues, FdrError> {
    let m = raw.len();
    if m == 0 {
        return Err(FdrError::Empty);
    }
    if let Some((index, &value)) = raw
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0))
    {
        return Err(FdrError::OutOfRangeP { index, value });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));

    let mut adjusted = alloc::vec![0.0; m];
    let mut running = 1.0_f64;
    for (pos, &i) in order.iter().enumerate().rev() {
        let scaled = scale_rounded_once(raw[i], m, pos + 1);
        running = running.min(scaled);
        adjusted[i] = running;
    }
    Ok(AdjustedPValues {
        raw: raw.to_vec(),
        adjusted,
    })
}

/// `p * m / j` with a single rounding, so equal ratios `p_j / j` give
/// bit-identical levels. The product is split exactly with an fma, then the
/// quotient is corrected by its exact remainder.
fn scale_rounded_once(p: f64, m: usize, j: usize) -> f64 {
    let (m, j) = (m as f64, j as f64);
    let hi = p * m;
    let lo = libm::fma(p, m, -hi);
    let q = hi / j;
    let r = libm::fma(-q, j, hi) + lo;
    q + r / j
}

impl AdjustedPValues {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Positions whose adjusted p-value is at most `alpha`, ascending.
    pub fn reject_at(&self, alpha: f64) -> Vec<usize> {
        reject_at(self, alpha)
    }
}

/// Positions whose adjusted p-value is at most `alpha`, ascending.
pub fn reject_at(adj: &AdjustedPValues, alpha: f64) -> Vec<usize> {
    adj.adjusted
        .iter()
        .enumerate()
        .filter(|(_, &q)| q <= alpha)
        .map(|(i, _)| i)
        .collect()
}
