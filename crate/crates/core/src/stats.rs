//! The statistical tests used by the selectors and the evaluation protocol:
//! exact binomial tails, Holm step-down correction, the Wilcoxon
//! signed-rank test and a one-sample (paired) Student t-test.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by the exact Wilcoxon path.
pub const WILCOXON_EXACT_MAX: usize = 50;

/// Direction of a one-sided alternative hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// Location of the first sample (or of the differences) is greater.
    Greater,
    Less,
}

/// `ln(n choose k)`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`, summed in the log domain.
pub fn binomial_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "success probability {p} outside [0, 1]"
        )));
    }
    if k == 0 || p == 1.0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let (lp, lq) = (libm::log(p), libm::log1p(-p));
    let terms: Vec<f64> = (k..=n)
        .map(|i| ln_choose(n, i) + i as f64 * lp + (n - i) as f64 * lq)
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| libm::exp(t - top)).sum();
    Ok(libm::exp(top + libm::log(sum)).clamp(0.0, 1.0))
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds n = {n}")));
    }
    binomial_tail(n - k, n, 1.0 - p)
}

/// Holm step-down procedure: sort ascending and reject `p_(i)` while
/// `p_(i) <= alpha / (m - i + 1)`. The mask is in input order.
pub fn holm(pvalues: &[f64], alpha: f64) -> Vec<bool> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if pvalues[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Single-step Bonferroni: reject `p <= alpha / m`.
pub fn bonferroni(pvalues: &[f64], alpha: f64) -> Vec<bool> {
    let m = pvalues.len() as f64;
    pvalues.iter().map(|&p| p <= alpha / m).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonTest {
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Differences left after dropping zeros.
    pub n_used: usize,
    pub exact: bool,
    pub p_value: f64,
}

/// Paired Wilcoxon signed-rank test of `x - y`.
///
/// Zero differences are dropped and tied absolute differences share their
/// average rank. Up to [`WILCOXON_EXACT_MAX`] non-zero differences the null
/// distribution is enumerated exactly (conditional on the tie pattern);
/// above that a tie-corrected normal approximation is used. If every
/// difference is zero the p-value is 1.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<WilcoxonTest> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "paired samples of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Domain("empty samples".into()));
    }
    let mut diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("non-finite difference".into()));
    }
    let n = diffs.len();
    if n == 0 {
        log::warn!(
            "wilcoxon: all {} differences are zero, reporting p = 1",
            x.len()
        );
        return Ok(WilcoxonTest {
            w_plus: 0.0,
            n_used: 0,
            exact: true,
            p_value: 1.0,
        });
    }
    diffs.sort_by(|a, b| libm::fabs(*a).total_cmp(&libm::fabs(*b)));

    // Doubled average ranks are integers: positions a..=b (1-based) share (a + b).
    let mut doubled = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && libm::fabs(diffs[j + 1]) == libm::fabs(diffs[i]) {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        doubled[i..=j].iter_mut().for_each(|r| *r = r2);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_plus = w2 as f64 / 2.0;

    if n <= WILCOXON_EXACT_MAX {
        let total: u64 = doubled.iter().sum();
        let mut counts = vec![0.0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &doubled {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let all = libm::ldexp(1.0, n as i32);
        let mass: f64 = match alternative {
            Alternative::Greater => counts[w2 as usize..].iter().sum(),
            Alternative::Less => counts[..=w2 as usize].iter().sum(),
        };
        return Ok(WilcoxonTest {
            w_plus,
            n_used: n,
            exact: true,
            p_value: (mass / all).min(1.0),
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean) / libm::sqrt(var);
    let p_value = match alternative {
        Alternative::Greater => normal_sf(z),
        Alternative::Less => normal_sf(-z),
    };
    Ok(WilcoxonTest {
        w_plus,
        n_used: n,
        exact: false,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// One-sided one-sample t-test of the mean of paired differences against 0.
///
/// Fails with [`Error::ZeroVariance`] when all differences are equal; the
/// caller decides how to treat that case.
pub fn paired_t_test(diffs: &[f64], alternative: Alternative) -> Result<TTest> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "t-test needs at least 2 values, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    if ss == 0.0 || diffs.iter().all(|&d| d == diffs[0]) {
        return Err(Error::ZeroVariance);
    }
    let sd = libm::sqrt(ss / (nf - 1.0));
    let t = mean / (sd / libm::sqrt(nf));
    let df = nf - 1.0;
    let p_value = match alternative {
        Alternative::Greater => student_t_sf(t, df),
        Alternative::Less => student_t_sf(-t, df),
    };
    Ok(TTest { t, df, p_value })
}

/// Upper tail `P(Z > z)` of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// Upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    let half = 0.5 * regularized_beta(x, df / 2.0, 0.5);
    if t > 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    if x < (a + 1.0) / (a + b + 2.0) {
        libm::exp(ln_front) * beta_fraction(x, a, b) / a
    } else {
        1.0 - libm::exp(ln_front) * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            break;
        }
    }
    h
}
