//! Cascade (pairwise) summation.
//!
//! Error grows as O(ε log n) instead of O(ε n) for naive left-to-right
//! accumulation. The split points depend only on the slice length, so the
//! result is reproducible bit-for-bit.

use num_complex::Complex64;

const BLOCK: usize = 32;

pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Σ |z|² over a slice, pairwise.
pub fn pairwise_norm_sqr(values: &[Complex64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().map(|z| z.norm_sqr()).sum();
    }
    let mid = values.len() / 2;
    pairwise_norm_sqr(&values[..mid]) + pairwise_norm_sqr(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_slices_match_naive_sum() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.5]), 6.5);
    }

    #[test]
    fn beats_naive_accumulation_on_many_small_terms() {
        // 1 + 1e7 * 1e-16: naive accumulation loses every small term, the
        // cascade only those sharing a leaf block with the 1.
        let mut values = vec![1e-16; 10_000_000];
        values.insert(0, 1.0);
        let naive: f64 = values.iter().sum();
        let cascade = pairwise_sum(&values);
        let exact = 1.0 + 1e-9;
        assert!((cascade - exact).abs() < 4e-15);
        assert!((naive - exact).abs() > (cascade - exact).abs());
    }

    #[test]
    fn norm_sqr_of_unit_phasors() {
        let v: Vec<Complex64> = (0..1000).map(|i| Complex64::from_polar(1.0, i as f64 * 0.37)).collect();
        assert!((pairwise_norm_sqr(&v) - 1000.0).abs() < 1e-10);
    }
}
