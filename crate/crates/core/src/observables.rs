//! Ordered, labelled sets of linearly independent observables.

use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::HermitianOperator;
use crate::scalar::Scalar;

/// Observables `{G_1, …, G_p}` on a common Hilbert space such that
/// `{I, G_1, …, G_p}` is linearly independent. The empty set is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet<S: Scalar> {
    dim: usize,
    observables: Vec<HermitianOperator<S>>,
    labels: Vec<String>,
}

/// Traceless part of `op`.
pub(crate) fn centered<S: Scalar>(op: &HermitianOperator<S>) -> HermitianOperator<S> {
    let shift = op.trace() / S::from_usize_lossy(op.dim());
    op - &HermitianOperator::identity(op.dim()).scaled(shift)
}

/// Smallest eigenvalue of the Gram matrix of the centered, unit-normalized
/// observables; `None` if some observable is a multiple of the identity.
fn independence_margin<S: Scalar>(observables: &[HermitianOperator<S>]) -> Option<S> {
    let p = observables.len();
    if p == 0 {
        return Some(S::one());
    }
    let mut normalized = Vec::with_capacity(p);
    for op in observables {
        let c = centered(op);
        let n = c.frobenius_norm();
        if !(n > S::support_tolerance() * op.frobenius_norm()) {
            return None;
        }
        normalized.push(c.scaled(S::one() / n));
    }
    let gram = DMatrix::from_fn(p, p, |a, b| {
        normalized[a].inner(&normalized[b]).expect("shared dimension")
    });
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().copied().reduce(|a, b| a.min(b))
}

impl<S: Scalar> ObservableSet<S> {
    pub fn new(labels: Vec<String>, observables: Vec<HermitianOperator<S>>) -> Result<Self> {
        if labels.len() != observables.len() {
            return Err(Error::LengthMismatch {
                expected: observables.len(),
                found: labels.len(),
            });
        }
        let dim = observables
            .first()
            .map(HermitianOperator::dim)
            .ok_or_else(|| Error::InvalidInput("use ObservableSet::empty for p = 0".into()))?;
        let mut set = Self::empty(dim)?;
        set.labels = labels;
        set.observables = observables;
        set.validate()?;
        Ok(set)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Self {
            dim,
            observables: Vec::new(),
            labels: Vec::new(),
        })
    }

    /// Observables given as Pauli strings, labelled by the strings.
    pub fn paulis(words: &[&str]) -> Result<Self> {
        let ops = words
            .iter()
            .map(|w| HermitianOperator::pauli_string(w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(words.iter().map(|w| w.to_string()).collect(), ops)
    }

    /// All `4^n − 1` non-identity Pauli strings on `n` qubits: an
    /// informationally complete set.
    pub fn pauli_basis(qubits: usize) -> Result<Self> {
        if qubits == 0 {
            return Err(Error::DimensionTooSmall(1));
        }
        let letters = ['I', 'X', 'Y', 'Z'];
        let mut words = Vec::new();
        for code in 1..4usize.pow(qubits as u32) {
            let mut c = code;
            let mut w = vec!['I'; qubits];
            for slot in (0..qubits).rev() {
                w[slot] = letters[c % 4];
                c /= 4;
            }
            words.push(w.into_iter().collect::<String>());
        }
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        Self::paulis(&refs)
    }

    fn validate(&self) -> Result<()> {
        for op in &self.observables {
            if op.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: op.dim(),
                });
            }
        }
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate label `{l}`")));
            }
        }
        match independence_margin(&self.observables) {
            Some(m) if m > S::independence_tolerance() => Ok(()),
            Some(m) => Err(Error::DependentObservables {
                min_eigenvalue: m.as_f64(),
            }),
            None => Err(Error::DependentObservables { min_eigenvalue: 0.0 }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn observables(&self) -> &[HermitianOperator<S>] {
        &self.observables
    }

    pub fn get(&self, index: usize) -> Option<&HermitianOperator<S>> {
        self.observables.get(index)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Sub-set selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(indices.len());
        let mut observables = Vec::with_capacity(indices.len());
        for &i in indices {
            let op = self
                .observables
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("observable index {i} out of range")))?;
            labels.push(self.labels[i].clone());
            observables.push(op.clone());
        }
        let mut set = Self::empty(self.dim)?;
        set.labels = labels;
        set.observables = observables;
        set.validate()?;
        Ok(set)
    }

    /// Sub-set selected by label.
    pub fn select(&self, labels: &[&str]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| Error::UnknownLabel(l.to_string())))
            .collect::<Result<Vec<_>>>()?;
        self.subset(&idx)
    }

    /// Same observables under new labels.
    pub fn relabeled(&self, labels: Vec<String>) -> Result<Self> {
        Self::new(labels, self.observables.clone())
    }
}
