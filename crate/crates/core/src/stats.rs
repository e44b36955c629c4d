//! Medians, percentile bootstrap, and rank summaries.

use rand::Rng as _;

use crate::rng::seeded;

/// Median of a non-empty slice (mean of the two central values for even lengths).
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

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolation percentile, `q` in `[0, 1]`, on sorted input.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }

    pub fn contains_zero(&self) -> bool {
        !self.excludes_zero()
    }
}

/// Percentile bootstrap over resampled unit indices.
///
/// `statistic` receives the resampled indices (drawn with replacement from
/// `0..n`) and returns the statistic on that resample. Drawing indices rather
/// than values lets callers keep paired observations together.
pub fn bootstrap_indices<F>(n: usize, resamples: usize, level: f64, seed: u64, statistic: F) -> Option<Interval>
where
    F: Fn(&[usize]) -> f64,
{
    if n == 0 || resamples == 0 {
        return None;
    }
    let all: Vec<usize> = (0..n).collect();
    let estimate = statistic(&all);
    let mut rng = seeded(seed, &[0xB007]);
    let mut idx = vec![0usize; n];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for slot in idx.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        stats.push(statistic(&idx));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Some(Interval {
        estimate,
        lower: percentile_sorted(&stats, alpha),
        upper: percentile_sorted(&stats, 1.0 - alpha),
    })
}

/// Mann-Whitney style probability that a draw from `a` exceeds one from `b`
/// (ties count one half).
pub fn prob_greater(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut wins = 0.0;
    for x in a {
        for y in b {
            wins += match x.total_cmp(y) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    wins / (a.len() * b.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn bootstrap_of_constant_is_degenerate() {
        let v = vec![5.0; 20];
        let ci = bootstrap_indices(v.len(), 500, 0.95, 1, |ix| {
            median(&ix.iter().map(|&i| v[i]).collect::<Vec<_>>()).unwrap()
        })
        .unwrap();
        assert_eq!((ci.lower, ci.estimate, ci.upper), (5.0, 5.0, 5.0));
        assert!(ci.excludes_zero());
    }

    #[test]
    fn bootstrap_mean_brackets_truth() {
        let v: Vec<f64> = (0..200).map(|i| (i % 10) as f64).collect();
        let ci = bootstrap_indices(v.len(), 2000, 0.95, 3, |ix| {
            ix.iter().map(|&i| v[i]).sum::<f64>() / ix.len() as f64
        })
        .unwrap();
        assert!(ci.lower < 4.5 && 4.5 < ci.upper);
        assert!(ci.upper - ci.lower < 1.0);
    }

    #[test]
    fn prob_greater_handles_ties() {
        assert_eq!(prob_greater(&[1.0], &[1.0]), 0.5);
        assert_eq!(prob_greater(&[2.0, 3.0], &[1.0]), 1.0);
    }
}
