//! Sparse coefficient tensors `f_{i_1…i_m}` of a kernel's series expansion.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finitely supported map from order-`m` multi-indices (components `≥ 1`)
/// to non-zero real coefficients, kept in lexicographic index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    order: usize,
    entries: BTreeMap<Vec<usize>, f64>,
}

/// One serialized entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub index: Vec<usize>,
    pub value: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TensorJson {
    List(Vec<TensorEntry>),
    WithOrder { order: usize, entries: Vec<TensorEntry> },
}

impl CoefficientTensor {
    pub fn empty(order: usize) -> Self {
        assert!(order >= 1, "kernel order must be positive");
        CoefficientTensor {
            order,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a tensor; duplicate indices are summed and exact zeros dropped.
    pub fn from_entries<I>(order: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        if order == 0 {
            return Err(Error::InvalidParameter("kernel order must be positive".into()));
        }
        let mut t = CoefficientTensor::empty(order);
        for (index, value) in entries {
            t.add(index, value)?;
        }
        t.entries.retain(|_, v| *v != 0.0);
        Ok(t)
    }

    fn add(&mut self, index: Vec<usize>, value: f64) -> Result<()> {
        if index.len() != self.order {
            return Err(Error::OrderMismatch {
                got: index.len(),
                expected: self.order,
                index,
            });
        }
        if index.contains(&0) {
            return Err(Error::ConstantIndex(index));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("coefficient at {index:?}")));
        }
        *self.entries.entry(index).or_insert(0.0) += value;
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.entries.get(index).copied().unwrap_or(0.0)
    }

    /// Distinct basis indices appearing anywhere in the tensor, ascending.
    pub fn distinct_indices(&self) -> Vec<usize> {
        self.entries
            .keys()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().flatten().copied().max()
    }

    /// `Σ |f|^p` over the non-zero entries.
    pub fn norm_sum(&self, p: f64) -> f64 {
        crate::numeric::compensated_sum(self.entries.values().map(|v| v.abs().powf(p)))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.entries.values_mut().for_each(|v| *v *= factor);
        out.entries.retain(|_, v| *v != 0.0);
        out
    }

    /// Drops entries with `|value| < threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.entries.retain(|_, v| v.abs() >= threshold);
        self
    }

    pub fn to_entries(&self) -> Vec<TensorEntry> {
        self.entries
            .iter()
            .map(|(k, v)| TensorEntry {
                index: k.clone(),
                value: *v,
            })
            .collect()
    }

    /// JSON list of `{index, value}` in lexicographic index order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_entries()).expect("tensor entries serialize")
    }

    /// Accepts either the bare entry list or `{"order": m, "entries": [...]}`.
    /// An empty bare list carries no order and is rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: TensorJson =
            serde_json::from_str(text).map_err(|e| Error::MalformedTensor(e.to_string()))?;
        let (order, entries) = match parsed {
            TensorJson::WithOrder { order, entries } => (order, entries),
            TensorJson::List(entries) => match entries.first() {
                Some(first) => (first.index.len(), entries),
                None => {
                    return Err(Error::MalformedTensor(
                        "empty entry list; use {\"order\": m, \"entries\": []}".into(),
                    ))
                }
            },
        };
        CoefficientTensor::from_entries(order, entries.into_iter().map(|e| (e.index, e.value)))
    }
}
