//! Empirical law distances, a rank-trend test and the paired bootstrap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn sorted(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Exact `W_1` between two empirical laws on the line,
/// `int_0^1 |F_a^{-1}(s) - F_b^{-1}(s)| ds`.
///
/// Equal sample counts reduce to the mean absolute difference of the sorted
/// samples; unequal counts are handled by merging the quantile breakpoints.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    sorted_wasserstein1(&sorted(a), &sorted(b))
}

fn sorted_wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    }
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - s) * (a[i] - b[j]).abs();
        s = next;
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    total
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_stat(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Sample mean and unbiased variance.
pub fn mean_var(a: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Kendall rank correlation of `(x_i, y_i)` and the one-sided p-value for
/// a negative association.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub tau: f64,
    pub p_value: f64,
    pub level: f64,
    pub decreasing: bool,
}

/// Largest sample size for which the null distribution is enumerated exactly.
const EXACT_KENDALL: usize = 20;

/// Number of permutations of `n` items with each count of inversions.
fn inversion_counts(n: usize) -> Vec<f64> {
    let mut counts = vec![1.0];
    for k in 1..=n {
        let mut next = vec![0.0; counts.len() + k - 1];
        for (i, &c) in counts.iter().enumerate() {
            for j in 0..k {
                next[i + j] += c;
            }
        }
        counts = next;
    }
    counts
}

/// Kendall's tau between `x` and `y`, testing `tau < 0` at `level`.
///
/// Without ties the p-value is exact for up to 20 points; otherwise the
/// normal approximation with variance `n(n-1)(2n+5)/18` is used.
pub fn kendall_trend(x: &[f64], y: &[f64], level: f64) -> TrendTest {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant, mut ties) = (0i64, 0i64, false);
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[j] - x[i]).signum() * (y[j] - y[i]).signum();
            if x[j] == x[i] || y[j] == y[i] {
                ties = true;
            } else if s > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    let s = (concordant - discordant) as f64;
    let tau = if pairs > 0.0 { s / pairs } else { 0.0 };
    let p_value = if n < 2 {
        1.0
    } else if !ties && n <= EXACT_KENDALL {
        // S = pairs - 2 * inversions; P(S <= s) = P(inversions >= (pairs - s)/2)
        let counts = inversion_counts(n);
        let total: f64 = counts.iter().sum();
        let k = ((pairs - s) / 2.0).round() as usize;
        counts[k..].iter().sum::<f64>() / total
    } else {
        let var = (n * (n - 1) * (2 * n + 5)) as f64 / 18.0;
        // continuity-corrected lower tail
        let z = (s + 1.0) / var.sqrt();
        0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
    };
    TrendTest {
        tau,
        p_value,
        level,
        decreasing: tau < 0.0 && p_value < level,
    }
}

/// Point estimate with a percentile confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Paired basic bootstrap: path indices are resampled jointly so that
/// common random numbers stay paired, and the interval is reflected about
/// the estimate (`2 v - q_hi, 2 v - q_lo`) to undo the upward resampling bias
/// of distances between empirical laws.
pub fn paired_bootstrap<F>(n: usize, resamples: usize, seed: u64, level: f64, stat: F) -> Estimate
where
    F: Fn(&[usize]) -> f64,
{
    let identity: Vec<usize> = (0..n).collect();
    let value = stat(&identity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut reps: Vec<f64> = (0..resamples)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            stat(&idx)
        })
        .collect();
    reps.sort_unstable_by(f64::total_cmp);
    let q = |p: f64| reps[((p * resamples as f64).floor() as usize).min(resamples - 1)];
    let alpha = 0.5 * (1.0 - level);
    Estimate {
        value,
        lo: 2.0 * value - q(1.0 - alpha),
        hi: 2.0 * value - q(alpha),
    }
}

/// Bootstrap interval for `W_1` between paired samples, clipped at zero.
pub fn w1_bootstrap(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> Estimate {
    assert_eq!(a.len(), b.len());
    let mut sa = vec![0.0; a.len()];
    let mut sb = vec![0.0; b.len()];
    let sa = std::cell::RefCell::new(&mut sa);
    let sb = std::cell::RefCell::new(&mut sb);
    let e = paired_bootstrap(a.len(), resamples, seed, 0.95, |idx| {
        let (mut x, mut y) = (sa.borrow_mut(), sb.borrow_mut());
        for (k, &i) in idx.iter().enumerate() {
            x[k] = a[i];
            y[k] = b[i];
        }
        x.sort_unstable_by(f64::total_cmp);
        y.sort_unstable_by(f64::total_cmp);
        sorted_wasserstein1(&x, &y)
    });
    Estimate { lo: e.lo.max(0.0), ..e }
}

/// Fixed unit directions for projecting `d`-dimensional samples.
pub fn projections(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}
