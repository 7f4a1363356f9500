//! Exact-arithmetic Benjamini-Hochberg oracle: runs the classical step-up
//! rule at every candidate level `p_(j) m / j` with big-integer comparisons
//! and reports, per hypothesis, the correctly rounded smallest level that
//! rejects it.

use num_bigint::BigInt;
use std::cmp::Ordering;

/// `n * 2^e / d`
struct Dyadic {
    n: BigInt,
    e: i32,
    d: u64,
}

fn decompose(x: f64) -> (u64, i32) {
    assert!(x >= 0.0 && x.is_finite());
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1 << 52), exp - 1075)
    }
}

fn dyadic(x: f64, mul: u64, div: u64) -> Dyadic {
    let (m, e) = decompose(x);
    Dyadic {
        n: BigInt::from(m) * mul,
        e,
        d: div,
    }
}

fn cmp(a: &Dyadic, b: &Dyadic) -> Ordering {
    let e = a.e.min(b.e);
    let lhs = (&a.n * b.d) << (a.e - e) as usize;
    let rhs = (&b.n * a.d) << (b.e - e) as usize;
    lhs.cmp(&rhs)
}

/// Nearest `f64` to `v`, ties to even.
fn round(v: &Dyadic, guess: f64) -> f64 {
    if v.n == BigInt::from(0) {
        return 0.0;
    }
    let distance = |c: f64| {
        let (m, e) = decompose(c);
        let ce = e.min(v.e);
        let lhs = (BigInt::from(m) * v.d) << (e - ce) as usize;
        let rhs = &v.n << (v.e - ce) as usize;
        let diff = lhs - rhs;
        if diff < BigInt::from(0) { -diff } else { diff }
    };
    let base = guess.to_bits() as i64;
    (base - 2..=base + 2)
        .filter(|&b| b >= 0)
        .map(|b| f64::from_bits(b as u64))
        .min_by(|&a, &b| {
            distance(a)
                .cmp(&distance(b))
                .then_with(|| (a.to_bits() & 1).cmp(&(b.to_bits() & 1)))
        })
        .unwrap()
}

pub fn brute_force_bh(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = vec![1.0f64; m];
    for j in 1..=m {
        let pj = sorted[j - 1];
        let level = round(&dyadic(pj, m as u64, j as u64), pj * m as f64 / j as f64);
        // largest k with p_(k) <= k q / m, i.e. p_(k) j <= k p_(j)
        let k_star = (1..=m).rev().find(|&k| {
            cmp(&dyadic(sorted[k - 1], j as u64, 1), &dyadic(pj, k as u64, 1)) != Ordering::Greater
        });
        let Some(k) = k_star else { continue };
        for (i, &p) in raw.iter().enumerate() {
            if p <= sorted[k - 1] {
                out[i] = out[i].min(level);
            }
        }
    }
    out
}
