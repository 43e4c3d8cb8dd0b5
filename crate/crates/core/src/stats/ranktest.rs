//! Two-sample rank-sum test with midranks, exact for small samples.

use super::StatsError;
use statrs::distribution::{ContinuousCDF, Normal};

/// Combined sample size up to which the exact permutation distribution is
/// enumerated; beyond it the normal approximation takes over. 12 keeps the
/// sweep at C(12,6) = 924 subsets out of 4096 masks — effectively free.
const EXACT_LIMIT: usize = 12;

/// Rank-sum test of `a` against `b`. Returns the rank-sum statistic of `a`
/// (ties share midranks) and the two-sided p-value: exact by enumerating
/// every assignment of the pooled values to the two groups when
/// `a.len() + b.len() <= 12`, otherwise a normal approximation with tie and
/// continuity corrections. Samples where every pooled value is identical
/// give p = 1.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Validation(
            "rank-sum test requires two non-empty samples".into(),
        ));
    }
    if !a.iter().chain(b).all(|v| v.is_finite()) {
        return Err(StatsError::Validation(
            "rank-sum test requires finite values".into(),
        ));
    }
    let n_a = a.len();
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let w: f64 = ranks[..n_a].iter().sum();
    let n = pooled.len();
    let p = if n <= EXACT_LIMIT {
        exact_p(w, &ranks, n_a)
    } else {
        approx_p(w, &ranks, n_a)
    };
    Ok((w, p))
}

/// Ranks 1..=n with tied runs averaged.
fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end (0-based) share the average 1-based rank
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

/// Exact two-sided p: the share of the C(n, n_a) equally likely group
/// assignments whose rank sum deviates from the mean at least as far as
/// the observed one (small slack so float dust cannot drop the observed
/// assignment itself from the count).
fn exact_p(w: f64, ranks: &[f64], n_a: usize) -> f64 {
    let n = ranks.len();
    let mu = n_a as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (w - mu).abs() - 1e-12;
    let mut total = 0u64;
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != n_a {
            continue;
        }
        total += 1;
        let sum: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (sum - mu).abs() >= observed {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

/// Normal approximation with the usual tie-corrected variance and a half-
/// unit continuity correction.
fn approx_p(w: f64, ranks: &[f64], n_a: usize) -> f64 {
    let n = ranks.len();
    let n_b = n - n_a;
    let mu = n_a as f64 * (n as f64 + 1.0) / 2.0;

    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }

    let nf = n as f64;
    let variance = (n_a as f64 * n_b as f64 / 12.0)
        * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if variance <= 0.0 {
        return 1.0; // every pooled value tied: the statistic is degenerate
    }
    let z = ((w - mu).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent midranks: for each value, one plus the count of smaller
    /// values plus half the count of equal others.
    fn oracle_ranks(values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|&v| {
                let less = values.iter().filter(|&&o| o < v).count() as f64;
                let equal = values.iter().filter(|&&o| o == v).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    }

    /// Independent exact p by recursive subset enumeration.
    fn oracle_exact(a: &[f64], b: &[f64]) -> (f64, f64) {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let ranks = oracle_ranks(&pooled);
        let n_a = a.len();
        let w: f64 = ranks[..n_a].iter().sum();
        let mu = n_a as f64 * (pooled.len() as f64 + 1.0) / 2.0;
        let mut sums = Vec::new();
        subset_sums(&ranks, n_a, 0, 0.0, &mut sums);
        let observed = (w - mu).abs() - 1e-12;
        let extreme = sums.iter().filter(|s| (*s - mu).abs() >= observed).count();
        (w, extreme as f64 / sums.len() as f64)
    }

    fn subset_sums(ranks: &[f64], left: usize, from: usize, acc: f64, out: &mut Vec<f64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        if ranks.len() - from < left {
            return;
        }
        subset_sums(ranks, left - 1, from + 1, acc + ranks[from], out);
        subset_sums(ranks, left, from + 1, acc, out);
    }

    #[test]
    fn separated_triples_give_one_tenth() {
        let (w, p) = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(w, 6.0);
        assert!((p - 0.1).abs() < 1e-12, "p = {p}");
    }

    #[test]
    fn identical_samples_give_p_one() {
        let a = [2.0, 2.0, 5.0, 7.0];
        let (_, p) = wilcoxon_rank_sum(&a, &a).unwrap();
        assert_eq!(p, 1.0);
        // large path too: 20 identical constants have zero variance
        let c = vec![3.0; 10];
        let (_, p) = wilcoxon_rank_sum(&c, &c).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn midranks_average_tied_runs() {
        assert_eq!(midranks(&[10.0, 20.0, 20.0, 30.0]), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[5.0, 5.0]), [1.5, 1.5]);
        // every pooled assignment of fully tied data is equally extreme
        let (w, p) = wilcoxon_rank_sum(&[5.0, 5.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(w, 6.0); // two midranks of 3
        assert_eq!(p, 1.0);
    }

    #[test]
    fn exact_path_matches_the_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..60 {
            let n_a = rng.gen_range(1..=5);
            let n_b = rng.gen_range(1..=5);
            // draw from a tiny grid so ties are common
            let a: Vec<f64> = (0..n_a).map(|_| f64::from(rng.gen_range(0..4))).collect();
            let b: Vec<f64> = (0..n_b).map(|_| f64::from(rng.gen_range(0..4))).collect();
            let (w, p) = wilcoxon_rank_sum(&a, &b).unwrap();
            let (ow, op) = oracle_exact(&a, &b);
            assert!((w - ow).abs() < 1e-12, "trial {trial}: W {w} vs {ow}");
            assert!((p - op).abs() < 1e-12, "trial {trial}: p {p} vs {op}");
        }
    }

    #[test]
    fn two_sided_p_is_symmetric_in_the_samples() {
        let a = [1.0, 4.0, 4.0, 9.0];
        let b = [2.0, 3.0, 8.0];
        let (_, p_ab) = wilcoxon_rank_sum(&a, &b).unwrap();
        let (_, p_ba) = wilcoxon_rank_sum(&b, &a).unwrap();
        assert!((p_ab - p_ba).abs() < 1e-12);
        // and on the approximate path
        let big_a: Vec<f64> = (0..9).map(f64::from).collect();
        let big_b: Vec<f64> = (0..9).map(|i| f64::from(i) + 0.5).collect();
        let (_, q_ab) = wilcoxon_rank_sum(&big_a, &big_b).unwrap();
        let (_, q_ba) = wilcoxon_rank_sum(&big_b, &big_a).unwrap();
        assert!((q_ab - q_ba).abs() < 1e-12);
    }

    #[test]
    fn approximation_tracks_the_exact_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let a: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..10.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..10.0)).collect();
            let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
            let ranks = midranks(&pooled);
            let w: f64 = ranks[..6].iter().sum();
            let exact = exact_p(w, &ranks, 6);
            let approx = approx_p(w, &ranks, 6);
            assert!(
                (exact - approx).abs() < 0.02,
                "trial {trial}: exact {exact} vs approx {approx}"
            );
        }
    }

    #[test]
    fn clear_separation_is_significant_on_the_large_path() {
        let low: Vec<f64> = (0..15).map(|i| f64::from(i)).collect();
        let high: Vec<f64> = (0..15).map(|i| f64::from(i) + 100.0).collect();
        let (_, p) = wilcoxon_rank_sum(&low, &high).unwrap();
        // full separation at n = 15 + 15: z = (112.5 - 0.5) / sqrt(581.25)
        assert!(p < 1e-5, "p = {p}");
        let mixed: Vec<f64> = (0..15).map(|i| f64::from(i) + 0.25).collect();
        let (_, p_mixed) = wilcoxon_rank_sum(&low, &mixed).unwrap();
        assert!(p_mixed > 0.5, "p = {p_mixed}");
    }

    #[test]
    fn empty_and_non_finite_samples_are_rejected() {
        assert!(matches!(
            wilcoxon_rank_sum(&[], &[1.0]),
            Err(StatsError::Validation(_))
        ));
        assert!(matches!(
            wilcoxon_rank_sum(&[1.0], &[]),
            Err(StatsError::Validation(_))
        ));
        assert!(matches!(
            wilcoxon_rank_sum(&[1.0, f64::NAN], &[1.0]),
            Err(StatsError::Validation(_))
        ));
    }
}
