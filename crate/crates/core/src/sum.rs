/// Kahan-compensated running sum. Summation order is always the order in
/// which values are added, so results are reproducible bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline(always)]
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline(always)]
    pub(crate) fn total(self) -> f64 {
        self.sum
    }
}

/// Mean of `column` over `rows`, left to right. `rows` must be non-empty.
#[inline]
pub(crate) fn mean_over(column: &[f64], rows: &[usize]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &i in rows {
        acc.add(column[i]);
    }
    acc.total() / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1.0e16);
        assert_eq!(acc.total(), 10.0);
    }

    #[test]
    fn mean_over_subset() {
        let col = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean_over(&col, &[0, 1]), 1.5);
        assert_eq!(mean_over(&col, &[3, 2]), 3.5);
    }
}
