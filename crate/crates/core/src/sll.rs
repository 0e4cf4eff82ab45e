//! Sequence-likelihood scoring: softmax over the log-likelihoods of the
//! "yes" and "no" completions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::BinaryDist;

/// Summed log-likelihoods (nats) of the two candidate completions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodPair {
    ll_yes: f64,
    ll_no: f64,
}

impl LikelihoodPair {
    pub fn new(ll_yes: f64, ll_no: f64) -> Result<Self> {
        if ll_yes.is_finite() && ll_no.is_finite() {
            Ok(LikelihoodPair { ll_yes, ll_no })
        } else {
            Err(Error::NonFiniteLikelihood { ll_yes, ll_no })
        }
    }

    pub fn ll_yes(&self) -> f64 {
        self.ll_yes
    }

    pub fn ll_no(&self) -> f64 {
        self.ll_no
    }
}

pub fn sll_probability(pair: LikelihoodPair) -> BinaryDist {
    let top = pair.ll_yes.max(pair.ll_no);
    let yes = (pair.ll_yes - top).exp();
    let no = (pair.ll_no - top).exp();
    BinaryDist::clamped(yes / (yes + no))
}
