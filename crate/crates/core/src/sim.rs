//! Synthetic data from the sparse linear design
//! `Y_j = B0_j + B1_j * A + e_j`, with `A ~ Bernoulli(1/2)`,
//! `B0_j ~ N(0, 1)`, `B1_j = effect` for the first `n_true` outcomes and 0
//! otherwise, and `e_ij ~ N(0, sigma_e^2)`.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`. Stream 0
//! draws the treatment vector; outcome column `j` uses stream `j + 1`, so a
//! column's values do not depend on how columns are scheduled. Within a
//! column the intercept is drawn first, then one noise value per row.
//! Normal deviates use `rand_distr::StandardNormal` (ziggurat).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{validate_dataset, Dataset, DatasetError, OutcomeMatrix};

const MAX_TREATMENT_DRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation design: {0}")]
    InvalidDesign(&'static str),
    #[error("treatment draw stayed single-arm after {0} attempts")]
    DegenerateDraw(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimDesign {
    pub p: usize,
    pub n: usize,
    pub n_true: usize,
    pub effect_size: f64,
    pub sigma_e: f64,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            p: 1000,
            n: 100,
            n_true: 10,
            effect_size: 1.0,
            sigma_e: 0.1,
            seed: 0,
        }
    }
}

/// A generated dataset and the (0-based) indices of its true effects.
#[derive(Debug, Clone)]
pub struct SimData {
    pub dataset: Dataset,
    pub truth: Vec<usize>,
}

pub fn generate(design: &SimDesign) -> Result<SimData, SimError> {
    if design.n < 2 {
        return Err(SimError::InvalidDesign("n must be at least 2"));
    }
    if design.n_true > design.p {
        return Err(SimError::InvalidDesign("n_true exceeds p"));
    }
    if !(design.sigma_e >= 0.0 && design.sigma_e.is_finite()) {
        return Err(SimError::InvalidDesign("sigma_e must be finite and non-negative"));
    }
    if !design.effect_size.is_finite() {
        return Err(SimError::InvalidDesign("effect size must be finite"));
    }

    let n = design.n;
    let treatment = draw_treatment(design.seed, n)?;

    let fill = |j: usize, col: &mut [f64]| {
        let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
        rng.set_stream(j as u64 + 1);
        let b0: f64 = rng.sample(StandardNormal);
        let b1 = if j < design.n_true { design.effect_size } else { 0.0 };
        for (y, &a) in col.iter_mut().zip(&treatment) {
            let e: f64 = rng.sample(StandardNormal);
            *y = b0 + b1 * f64::from(a) + design.sigma_e * e;
        }
    };

    let mut values = alloc::vec![0.0; n * design.p];
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, col)| fill(j, col));
    }
    #[cfg(not(feature = "parallel"))]
    for (j, col) in values.chunks_mut(n).enumerate() {
        fill(j, col);
    }

    let names: Vec<String> = (1..=design.p).map(|j| format!("y{j}")).collect();
    let matrix = OutcomeMatrix::from_column_major(n, design.p, values)?;
    let dataset = validate_dataset(matrix, treatment, names)?;
    Ok(SimData {
        dataset,
        truth: (0..design.n_true).collect(),
    })
}

fn draw_treatment(seed: u64, n: usize) -> Result<Vec<u8>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    for _ in 0..MAX_TREATMENT_DRAWS {
        let a: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        let treated = a.iter().filter(|&&x| x == 1).count();
        if treated > 0 && treated < n {
            return Ok(a);
        }
    }
    Err(SimError::DegenerateDraw(MAX_TREATMENT_DRAWS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screening::fold_effect_sizes;
    use alloc::vec;

    #[test]
    fn noiseless_design_is_exact() {
        let design = SimDesign {
            p: 20,
            n: 30,
            sigma_e: 0.0,
            effect_size: 1.5,
            seed: 4,
            ..Default::default()
        };
        let sim = generate(&design).unwrap();
        let all: Vec<usize> = (0..30).collect();
        let effects = fold_effect_sizes(&sim.dataset, &all).unwrap();
        for (j, e) in effects.iter().enumerate() {
            let want = if j < 10 { 1.5 } else { 0.0 };
            assert!((e - want).abs() < 1e-12, "column {j}: {e}");
        }
        assert_eq!(sim.truth, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let design = SimDesign {
            p: 50,
            n: 12,
            seed: 99,
            ..Default::default()
        };
        let a = generate(&design).unwrap();
        let b = generate(&design).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate(&SimDesign { seed: 100, ..design }).unwrap();
        assert_ne!(a.dataset.values(), c.dataset.values());
    }

    #[test]
    fn columns_do_not_depend_on_p() {
        let base = SimDesign { n_true: 3, n: 10, seed: 3, ..Default::default() };
        let small = generate(&SimDesign { p: 5, ..base }).unwrap();
        let large = generate(&SimDesign { p: 40, ..base }).unwrap();
        assert_eq!(small.dataset.values(), &large.dataset.values()[..50]);
    }

    #[test]
    fn global_null_has_no_truth() {
        let sim = generate(&SimDesign { n_true: 0, p: 5, n: 10, ..Default::default() }).unwrap();
        assert!(sim.truth.is_empty());
    }

    #[test]
    fn invalid_designs() {
        let d = SimDesign::default();
        assert!(matches!(generate(&SimDesign { n: 1, ..d }), Err(SimError::InvalidDesign(_))));
        assert!(matches!(generate(&SimDesign { p: 5, ..d }), Err(SimError::InvalidDesign(_))));
        assert!(matches!(
            generate(&SimDesign { sigma_e: -1.0, ..d }),
            Err(SimError::InvalidDesign(_))
        ));
    }

    #[test]
    fn two_rows_still_get_both_arms() {
        for seed in 0..50 {
            let sim = generate(&SimDesign { p: 1, n: 2, n_true: 0, seed, ..Default::default() }).unwrap();
            let mut t = sim.dataset.treatment().to_vec();
            t.sort();
            assert_eq!(t, vec![0, 1]);
        }
    }
}
