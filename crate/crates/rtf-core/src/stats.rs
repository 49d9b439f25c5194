//! Small statistical test helpers.
//!
//! The sign test is part of the experiment report; the remaining tests back
//! the statistical assertions in the test suites.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

/// One-sided exact sign test.
///
/// `wins` counts the splits where the putatively better method strictly beat
/// the other; `n` is the total number of comparisons including ties. Ties are
/// deliberately counted against the better method, so the test is
/// conservative. Returns `P(Bin(n, 1/2) >= wins)`.
pub fn sign_test_p(wins: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("n > 0");
    // sf(k) = P(X > k), so P(X >= wins) = sf(wins - 1).
    b.sf(wins - 1)
}

/// Upper-tail chi-square p-value for `stat` with `dof` degrees of freedom.
pub fn chi_square_p(stat: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    let d = ChiSquared::new(dof).expect("dof > 0");
    d.sf(stat)
}

/// Chi-square goodness-of-fit p-value for observed counts against expected
/// probabilities.
pub fn chi_square_gof_p(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n as f64 * p;
        if e > 0.0 {
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    chi_square_p(stat, observed.len() as f64 - 1.0)
}

/// Chi-square homogeneity p-value for two aligned count histograms.
///
/// Adjacent bins are pooled until both expected counts reach 5, which keeps
/// the asymptotic null valid for sparse tails (integer-valued samples such
/// as leaf counts produce long thin tails).
pub fn chi_square_homogeneity_p(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n1: u64 = a.iter().sum();
    let n2: u64 = b.iter().sum();
    assert!(n1 > 0 && n2 > 0);
    let f1 = n1 as f64 / (n1 + n2) as f64;
    let f2 = n2 as f64 / (n1 + n2) as f64;
    let mut pooled: Vec<(u64, u64)> = Vec::new();
    let (mut acc_a, mut acc_b) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        acc_a += x;
        acc_b += y;
        let tot = (acc_a + acc_b) as f64;
        if tot * f1 >= 5.0 && tot * f2 >= 5.0 {
            pooled.push((acc_a, acc_b));
            acc_a = 0;
            acc_b = 0;
        }
    }
    if acc_a + acc_b > 0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc_a;
            last.1 += acc_b;
        } else {
            pooled.push((acc_a, acc_b));
        }
    }
    if pooled.len() < 2 {
        return 1.0;
    }
    let mut stat = 0.0;
    for &(x, y) in &pooled {
        let tot = (x + y) as f64;
        let (e1, e2) = (tot * f1, tot * f2);
        stat += (x as f64 - e1).powi(2) / e1 + (y as f64 - e2).powi(2) / e2;
    }
    chi_square_p(stat, pooled.len() as f64 - 1.0)
}

/// Two-sided two-proportion z-test p-value (pooled variance).
///
/// Degenerate pools (all successes or all failures) return 1 when the counts
/// agree exactly and 0 otherwise; with the sample sizes used here that only
/// happens when the null is either certain or hopeless.
pub fn two_proportion_p(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    assert!(n1 > 0 && n2 > 0);
    let p1 = x1 as f64 / n1 as f64;
    let p2 = x2 as f64 / n2 as f64;
    let pool = (x1 + x2) as f64 / (n1 + n2) as f64;
    let var = pool * (1.0 - pool) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if var == 0.0 {
        return if p1 == p2 { 1.0 } else { 0.0 };
    }
    let z = (p1 - p2) / var.sqrt();
    let n = Normal::new(0.0, 1.0).unwrap();
    2.0 * n.sf(z.abs())
}

/// Kolmogorov asymptotic survival function Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..101 {
        let term = (-2.0 * (k as f64).powi(2) * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against Uniform[0, 1]. Samples need not be sorted.
pub fn ks_uniform_p(samples: &[f64]) -> f64 {
    let n = samples.len();
    assert!(n > 0);
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        d = d.max((x - lo).abs()).max((hi - x).abs());
    }
    kolmogorov_q(d * (n as f64).sqrt())
}

/// Two-sample KS test (asymptotic p-value).
pub fn ks_two_sample_p(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0);
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        let t = x.min(y);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    kolmogorov_q(d * ne.sqrt())
}
