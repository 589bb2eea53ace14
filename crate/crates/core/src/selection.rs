//! Ranking relevance hypotheses by penalized asymptotic log-likelihood.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs::fit_gibbs;
use crate::observables::ObservableSet;
use crate::scalar::{compensated_sum, Scalar};
use crate::state::{relative_entropy, DensityMatrix, Divergence};
use crate::tomography::SampleRecord;

/// The claim that, for every sample, the state is the closest one to σ
/// sharing its expectation values of the chosen pool observables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelevanceHypothesis {
    pub label: String,
    /// Ascending indices into the candidate pool.
    pub observable_indices: Vec<usize>,
    pub p: usize,
}

impl RelevanceHypothesis {
    pub fn new<S: Scalar>(indices: &[usize], pool: &ObservableSet<S>) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::InvalidInput(format!("repeated index in hypothesis {indices:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= pool.len()) {
            return Err(Error::InvalidInput(format!(
                "hypothesis index {bad} outside a pool of {}",
                pool.len()
            )));
        }
        let names: Vec<&str> = sorted.iter().map(|&i| pool.labels()[i].as_str()).collect();
        Ok(Self {
            label: format!("{{{}}}", names.join(",")),
            p: sorted.len(),
            observable_indices: sorted,
        })
    }

    pub fn from_labels<S: Scalar>(labels: &[&str], pool: &ObservableSet<S>) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| pool.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&idx, pool)
    }

    /// Every pool observable.
    pub fn full<S: Scalar>(pool: &ObservableSet<S>) -> Self {
        Self::new(&(0..pool.len()).collect::<Vec<_>>(), pool).expect("indices in range")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisScore<S> {
    /// `−Σ_i N_i S(μ^(i)‖π^(i))`.
    pub fit_term: S,
    /// `−(p/2) Σ_i ln N_i`.
    pub penalty_term: S,
    pub total: S,
    /// `S(μ^(i)‖π^(i))` per sample, in input order.
    pub per_sample_divergences: Vec<S>,
}

/// State closest to σ with the image's expectation values of the
/// hypothesis observables.
pub fn project_to_hypothesis<S: Scalar>(
    image: &DensityMatrix<S>,
    hypothesis: &RelevanceHypothesis,
    pool: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<DensityMatrix<S>> {
    let subset = pool.subset(&hypothesis.observable_indices)?;
    let g = subset
        .observables()
        .iter()
        .map(|o| image.expectation(o))
        .collect::<Result<Vec<S>>>()?;
    Ok(fit_gibbs(&subset, &g, sigma)?.model.state)
}

/// `−(p/2) Σ_i ln N_i`.
pub fn occam_penalty<S: Scalar>(p: usize, sizes: &[S]) -> S {
    let half_p = S::lit(p as f64 / 2.0);
    -half_p * compensated_sum(sizes.iter().map(|&n| n.ln()))
}

/// Penalized log-likelihood of the hypothesis given every sample, up to
/// hypothesis-independent constants.
pub fn score_hypothesis<S: Scalar>(
    samples: &[SampleRecord<S>],
    hypothesis: &RelevanceHypothesis,
    pool: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<HypothesisScore<S>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to score".into()));
    }
    let divergences = samples
        .par_iter()
        .map(|s| {
            let infinite = || Error::InfiniteDivergence { sample: s.id.clone() };
            // constraints that pin a rank-deficient image put π on the
            // boundary, where the projection has no finite parameters
            let pi = match project_to_hypothesis(&s.image, hypothesis, pool, sigma) {
                Err(e) if e.is_solver_failure() && !s.image.is_full_rank() => return Err(infinite()),
                other => other?,
            };
            match relative_entropy(&s.image, &pi)? {
                Divergence::Finite(d) => Ok(d),
                Divergence::Infinite => Err(infinite()),
            }
        })
        .collect::<Result<Vec<S>>>()?;
    let fit_term = -compensated_sum(
        samples
            .iter()
            .zip(&divergences)
            .map(|(s, &d)| S::lit(s.size as f64) * d),
    );
    let sizes: Vec<S> = samples.iter().map(|s| S::lit(s.size as f64)).collect();
    let penalty_term = occam_penalty(hypothesis.p, &sizes);
    Ok(HypothesisScore {
        fit_term,
        penalty_term,
        total: fit_term + penalty_term,
        per_sample_divergences: divergences,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedHypothesis<S> {
    pub hypothesis: RelevanceHypothesis,
    pub score: HypothesisScore<S>,
    /// Posterior probability under a uniform prior over the hypotheses.
    pub posterior_weight: S,
}

/// Scores every hypothesis and orders them best first; ties go to the
/// lexicographically smaller label.
pub fn rank_hypotheses<S: Scalar>(
    samples: &[SampleRecord<S>],
    hypotheses: &[RelevanceHypothesis],
    pool: &ObservableSet<S>,
    sigma: &DensityMatrix<S>,
) -> Result<Vec<RankedHypothesis<S>>> {
    if hypotheses.is_empty() {
        return Err(Error::InvalidInput("no hypotheses to rank".into()));
    }
    let scores = hypotheses
        .par_iter()
        .map(|h| score_hypothesis(samples, h, pool, sigma))
        .collect::<Result<Vec<_>>>()?;
    let mut ranked: Vec<RankedHypothesis<S>> = hypotheses
        .iter()
        .cloned()
        .zip(scores)
        .map(|(hypothesis, score)| RankedHypothesis {
            hypothesis,
            score,
            posterior_weight: S::zero(),
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.score
            .total
            .partial_cmp(&a.score.total)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.hypothesis.label.cmp(&b.hypothesis.label))
            .then_with(|| a.hypothesis.observable_indices.cmp(&b.hypothesis.observable_indices))
    });
    let best = ranked[0].score.total;
    let raw: Vec<S> = ranked.iter().map(|r| (r.score.total - best).exp()).collect();
    let norm = compensated_sum(raw.iter().copied());
    for (r, w) in ranked.iter_mut().zip(raw) {
        r.posterior_weight = w / norm;
    }
    Ok(ranked)
}

/// All subsets of the pool with at most `max_size` members, by size and
/// then lexicographically by index.
pub fn enumerate_hypotheses<S: Scalar>(pool: &ObservableSet<S>, max_size: usize) -> Result<Vec<RelevanceHypothesis>> {
    if max_size > pool.len() {
        return Err(Error::InvalidInput(format!(
            "max size {max_size} exceeds the pool of {}",
            pool.len()
        )));
    }
    let mut out = Vec::new();
    for size in 0..=max_size {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(RelevanceHypothesis::new(&combo, pool)?);
            // advance to the next combination in lexicographic order
            let Some(slot) = (0..size).rev().find(|&i| combo[i] < pool.len() - size + i) else {
                break;
            };
            combo[slot] += 1;
            for j in slot + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    Ok(out)
}
