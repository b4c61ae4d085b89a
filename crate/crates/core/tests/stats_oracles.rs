use rfsel_core::rng::{self, standard_normal, stream};
use rfsel_core::stats::{binomial_tail, paired_t_test, wilcoxon_signed_rank, Alternative};

fn choose(n: u64, k: u64) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// P(X >= k) by summing every term of the pmf.
fn tail_by_enumeration(k: u64, n: u64, p: f64) -> f64 {
    (k..=n)
        .map(|i| choose(n, i) as f64 * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32))
        .sum()
}

#[test]
fn binomial_tail_matches_enumeration() {
    for n in 0..=30u64 {
        for k in 0..=n {
            for p in [0.0, 0.01, 0.1, 0.2, 0.37, 0.5, 0.73, 0.99, 1.0] {
                let got = binomial_tail(k, n, p).unwrap();
                let want = tail_by_enumeration(k, n, p);
                assert!(
                    (got - want).abs() <= 1e-10 * want.max(1e-300) || (got - want).abs() < 1e-300,
                    "k={k} n={n} p={p}: {got} vs {want}"
                );
            }
        }
    }
}

/// Average ranks of |d| over the non-zero differences.
fn average_ranks(abs: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; abs.len()];
    for (i, &a) in abs.iter().enumerate() {
        let below = abs.iter().filter(|&&b| b < a).count() as f64;
        let equal = abs.iter().filter(|&&b| b == a).count() as f64;
        ranks[i] = below + (equal + 1.0) / 2.0;
    }
    ranks
}

/// Exact one-sided p-value by listing all 2^n sign assignments.
fn wilcoxon_by_enumeration(x: &[f64], y: &[f64], greater: bool) -> f64 {
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|v| *v != 0.0)
        .collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        let hit = if greater {
            w >= observed - 1e-9
        } else {
            w <= observed + 1e-9
        };
        if hit {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

#[test]
fn wilcoxon_exact_matches_sign_enumeration() {
    let mut r = stream(11, 0, 0);
    for trial in 0..400 {
        let n = 1 + trial % 12;
        // Coarse values produce ties among |d| and zero differences.
        let coarse = trial % 3 == 0;
        let draw = |r: &mut rand_chacha::ChaCha8Rng| {
            let v = standard_normal(r);
            if coarse {
                (v * 2.0).round() / 2.0
            } else {
                v
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        for (alt, greater) in [(Alternative::Greater, true), (Alternative::Less, false)] {
            let got = wilcoxon_signed_rank(&x, &y, alt).unwrap();
            let want = wilcoxon_by_enumeration(&x, &y, greater);
            assert!(
                (got.p_value - want).abs() < 1e-10,
                "n={n} {alt:?}: {} vs {want}",
                got.p_value
            );
        }
    }
}

/// Largest distance between the empirical CDF of `p` and the uniform CDF.
fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).abs().max((v - i as f64 / n).abs()))
        .fold(0.0, f64::max)
}

const SIMS: usize = 10_000;

#[test]
fn wilcoxon_null_pvalues_uniform() {
    for n in [20usize, 60] {
        let mut r = stream(21, n as u64, 0);
        let ps: Vec<f64> = (0..SIMS)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
                let y: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
                wilcoxon_signed_rank(&x, &y, Alternative::Greater)
                    .unwrap()
                    .p_value
            })
            .collect();
        let d = ks_uniform(ps);
        assert!(d < 0.05, "n={n}: KS distance {d}");
    }
}

#[test]
fn t_test_null_pvalues_uniform() {
    let mut r = stream(22, 0, 0);
    for n in [3usize, 10, 40] {
        let ps: Vec<f64> = (0..SIMS)
            .map(|_| {
                let d: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
                paired_t_test(&d, Alternative::Greater).unwrap().p_value
            })
            .collect();
        let d = ks_uniform(ps);
        assert!(d < 0.05, "n={n}: KS distance {d}");
    }
}

#[test]
fn binomial_null_pvalues_uniform() {
    let mut r = stream(23, 0, 0);
    let (n, p) = (2000u64, 0.3);
    let ps: Vec<f64> = (0..SIMS)
        .map(|_| {
            let k = (0..n).filter(|_| rng::unit(&mut r) < p).count() as u64;
            binomial_tail(k, n, p).unwrap()
        })
        .collect();
    let d = ks_uniform(ps);
    assert!(d < 0.05, "KS distance {d}");
}

#[test]
fn t_test_symmetric_large_sample_near_half() {
    let mut r = stream(24, 0, 0);
    let half: Vec<f64> = (0..500).map(|_| standard_normal(&mut r).abs()).collect();
    let d: Vec<f64> = half.iter().flat_map(|&v| [v, -v]).collect();
    let t = paired_t_test(&d, Alternative::Greater).unwrap();
    assert!((t.p_value - 0.5).abs() <= 0.05, "{}", t.p_value);
}
