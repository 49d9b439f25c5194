//! Dirichlet-multinomial marginal likelihood over tessellation leaves.
//!
//! Per-leaf class proportions carry a Dirichlet(alpha) prior and are
//! integrated out, leaving log B(alpha + m_j) - log B(alpha) per leaf, where
//! m_j are the leaf's labeled counts. Unlabeled (augmented) rows shape the
//! geometry but carry no count mass, which is exactly how missing labels are
//! marginalized.

use std::collections::BTreeMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// log of the multivariate beta function B(v) = prod Gamma(v_k) / Gamma(sum v_k).
pub fn log_multivariate_beta(v: &[f64]) -> f64 {
    let sum: f64 = v.iter().sum();
    v.iter().map(|&x| ln_gamma(x)).sum::<f64>() - ln_gamma(sum)
}

pub fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() || !alpha.iter().all(|a| a.is_finite() && *a > 0.0) {
        return Err(Error::NonPositiveAlpha);
    }
    Ok(())
}

fn add_counts(alpha: &[f64], m: &[u64]) -> Vec<f64> {
    alpha.iter().zip(m).map(|(a, &c)| a + c as f64).collect()
}

/// Empirical hyperparameter: alpha_k = n_k / 1000 from the training label
/// counts, floored at 1e-6 so classes absent from training still have a
/// proper prior.
pub fn empirical_alpha(class_counts: &[u64]) -> Vec<f64> {
    class_counts.iter().map(|&n| (n as f64 / 1000.0).max(1e-6)).collect()
}

/// Per-leaf labeled count vectors plus the shared hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCounts {
    alpha: Vec<f64>,
    per_leaf: BTreeMap<u32, Vec<u64>>,
}

impl LabelCounts {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        check_alpha(&alpha)?;
        Ok(Self { alpha, per_leaf: BTreeMap::new() })
    }

    pub fn single_leaf(alpha: Vec<f64>, leaf: u32, counts: Vec<u64>) -> Result<Self> {
        let mut s = Self::new(alpha)?;
        s.check_len(&counts)?;
        s.per_leaf.insert(leaf, counts);
        Ok(s)
    }

    pub fn from_leaves(
        alpha: Vec<f64>,
        leaves: impl IntoIterator<Item = (u32, Vec<u64>)>,
    ) -> Result<Self> {
        let mut s = Self::new(alpha)?;
        for (id, counts) in leaves {
            s.check_len(&counts)?;
            s.per_leaf.insert(id, counts);
        }
        Ok(s)
    }

    fn check_len(&self, counts: &[u64]) -> Result<()> {
        if counts.len() != self.alpha.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                got: counts.len(),
            });
        }
        Ok(())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_classes(&self) -> usize {
        self.alpha.len()
    }

    pub fn leaf(&self, id: u32) -> Option<&[u64]> {
        self.per_leaf.get(&id).map(Vec::as_slice)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (u32, &[u64])> {
        self.per_leaf.iter().map(|(id, c)| (*id, c.as_slice()))
    }

    pub fn total_counts(&self) -> Vec<u64> {
        let mut total = vec![0u64; self.alpha.len()];
        for counts in self.per_leaf.values() {
            for (t, c) in total.iter_mut().zip(counts) {
                *t += c;
            }
        }
        total
    }

    /// Replace a parent leaf by its two children and return the log
    /// likelihood ratio of the cut. The parent's counts must equal the
    /// componentwise sum of the children's.
    pub fn apply_cut(
        &mut self,
        parent: u32,
        minus: (u32, Vec<u64>),
        plus: (u32, Vec<u64>),
    ) -> Result<f64> {
        self.check_len(&minus.1)?;
        self.check_len(&plus.1)?;
        let parent_counts = self
            .per_leaf
            .get(&parent)
            .ok_or(Error::UnknownIndex(parent as usize))?
            .clone();
        let ratio = likelihood_ratio_on_cut(&parent_counts, &minus.1, &plus.1, &self.alpha)?;
        self.per_leaf.remove(&parent);
        self.per_leaf.insert(minus.0, minus.1);
        self.per_leaf.insert(plus.0, plus.1);
        Ok(ratio)
    }

    pub fn log_marginal(&self) -> f64 {
        let base = log_multivariate_beta(&self.alpha);
        self.per_leaf
            .values()
            .map(|m| log_multivariate_beta(&add_counts(&self.alpha, m)) - base)
            .sum()
    }
}

pub fn log_marginal_likelihood(counts: &LabelCounts) -> f64 {
    counts.log_marginal()
}

/// log [ B(a+m-) B(a+m+) / (B(a+m) B(a)) ]: the change in the marginal
/// likelihood when one leaf with counts m splits into m- and m+; all
/// untouched leaves cancel.
pub fn likelihood_ratio_on_cut(
    parent: &[u64],
    minus: &[u64],
    plus: &[u64],
    alpha: &[f64],
) -> Result<f64> {
    check_alpha(alpha)?;
    if parent.len() != alpha.len() || minus.len() != alpha.len() || plus.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: alpha.len(), got: parent.len() });
    }
    for k in 0..parent.len() {
        if minus[k] + plus[k] != parent[k] {
            return Err(Error::CountMismatch);
        }
    }
    Ok(log_multivariate_beta(&add_counts(alpha, minus))
        + log_multivariate_beta(&add_counts(alpha, plus))
        - log_multivariate_beta(&add_counts(alpha, parent))
        - log_multivariate_beta(alpha))
}

/// Posterior predictive class probabilities for a leaf: (alpha_k + m_k) /
/// (sum alpha + sum m).
pub fn predictive_distribution(m: &[u64], alpha: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), alpha.len());
    let denom: f64 = alpha.iter().sum::<f64>() + m.iter().sum::<u64>() as f64;
    alpha.iter().zip(m).map(|(a, &c)| (a + c as f64) / denom).collect()
}
