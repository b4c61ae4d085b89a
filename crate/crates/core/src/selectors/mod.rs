//! Feature selection algorithms.
//!
//! Boruta and RF-ACE are all-relevant methods that compare real features
//! against permuted shadows. Recursive feature elimination and the
//! regularised random forest look for a small predictive subset.

mod boruta;
mod rface;
mod rfe;
mod rrf;

use alloc::vec::Vec;

pub use boruta::{
    boruta_threshold, run_boruta, run_boruta_traced, BorutaParams, BorutaTrace, Correction,
};
pub use rface::{run_rface, RfAceParams};
pub use rfe::{rfe_schedule, run_rfe, run_rfe_traced, RfeParams};
pub use rrf::{run_rrf, RrfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Confirmed,
    Rejected,
    Undecided,
}

/// Outcome of one selector run. `selected` is always the sorted set of
/// `Confirmed` features; undecided features count as not selected.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected: Vec<usize>,
    pub status: Vec<Decision>,
    /// Seconds spent; filled in by whoever times the run.
    pub wall_clock: f64,
    pub iterations_used: usize,
}

impl Selection {
    pub fn from_status(status: Vec<Decision>, iterations_used: usize) -> Self {
        let selected = status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Decision::Confirmed)
            .map(|(i, _)| i)
            .collect();
        Selection {
            selected,
            status,
            wall_clock: 0.0,
            iterations_used,
        }
    }

    /// Selection confirming exactly `features` out of `p`, rejecting the rest.
    pub fn from_selected(p: usize, features: &[usize], iterations_used: usize) -> Self {
        let mut status = alloc::vec![Decision::Rejected; p];
        for &f in features {
            status[f] = Decision::Confirmed;
        }
        Self::from_status(status, iterations_used)
    }

    pub fn n_features(&self) -> usize {
        self.status.len()
    }

    pub fn count(&self, decision: Decision) -> usize {
        self.status.iter().filter(|s| **s == decision).count()
    }
}
