use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::{Decision, Selection};
use crate::dataset::{augment_with_shadows, Dataset};
use crate::error::{Error, Result};
use crate::importance::ImportanceSource;
use crate::rng::{self, tag};
use crate::stats::{paired_t_test, Alternative};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfAceParams {
    pub n_iter: usize,
    pub alpha: f64,
}

impl Default for RfAceParams {
    fn default() -> Self {
        RfAceParams {
            n_iter: 20,
            alpha: 0.05,
        }
    }
}

/// Artificial-contrast selection: over `n_iter` rounds of fresh shadows,
/// each feature's importance is paired with the mean shadow importance of
/// the same round, and a one-sided paired t-test decides whether the
/// feature beats the shadows.
///
/// When a feature's differences have zero variance the t-test is undefined;
/// the feature is then confirmed only if every difference is positive.
pub fn run_rface<R: RngCore + ?Sized>(
    d: &Dataset,
    src: &ImportanceSource,
    params: &RfAceParams,
    rng: &mut R,
) -> Result<Selection> {
    if params.n_iter < 2 {
        return Err(Error::param(format!(
            "RF-ACE needs at least 2 iterations, got {}",
            params.n_iter
        )));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha {} not in (0, 1)",
            params.alpha
        )));
    }
    let p = d.n_features();
    let seed = rng.next_u64();
    let mut diffs: Vec<Vec<f64>> = vec![Vec::with_capacity(params.n_iter); p];
    for it in 0..params.n_iter {
        let shadowed = augment_with_shadows(d, &mut rng::stream(seed, tag::SHADOW, it as u64));
        let imp = src.compute(
            &shadowed.combined(),
            &mut rng::stream(seed, tag::IMPORTANCE, it as u64),
        )?;
        let scores = imp.scores();
        let shadow = &scores[p..];
        let shadow_mean = shadow.iter().sum::<f64>() / shadow.len() as f64;
        for f in 0..p {
            diffs[f].push(scores[f] - shadow_mean);
        }
    }
    let status = diffs
        .iter()
        .enumerate()
        .map(|(f, x)| {
            let relevant = match paired_t_test(x, Alternative::Greater) {
                Ok(t) => t.p_value < params.alpha,
                Err(Error::ZeroVariance) => {
                    log::warn!(
                        "rf-ace: zero-variance differences for feature {f}, using sign rule"
                    );
                    x.iter().all(|&v| v > 0.0)
                }
                Err(e) => return Err(e),
            };
            Ok(if relevant {
                Decision::Confirmed
            } else {
                Decision::Rejected
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection::from_status(status, params.n_iter))
}
