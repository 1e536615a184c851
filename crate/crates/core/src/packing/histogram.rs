use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PackError;
use crate::moldata::MolecularGraph;

/// Number of graphs per node count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeHistogram {
    counts: BTreeMap<usize, usize>,
}

impl SizeHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sizes<I: IntoIterator<Item = usize>>(sizes: I) -> Self {
        let mut hist = Self::new();
        for s in sizes {
            hist.add(s, 1);
        }
        hist
    }

    pub fn from_graphs<'a, I>(graphs: I) -> Self
    where
        I: IntoIterator<Item = &'a MolecularGraph>,
    {
        Self::from_sizes(graphs.into_iter().map(MolecularGraph::num_nodes))
    }

    /// Builds a histogram from `(size, count)` pairs; zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut hist = Self::new();
        for (s, c) in pairs {
            hist.add(s, c);
        }
        hist
    }

    /// Reads the `size,count` CSV written by the dataset statistics export;
    /// `#` comment lines and the header row are skipped.
    pub fn from_csv(text: &str) -> Result<Self, PackError> {
        let mut hist = Self::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("size") {
                continue;
            }
            let bad = || PackError::Histogram(format!("line {}: `{line}`", k + 1));
            let (s, c) = line.split_once(',').ok_or_else(bad)?;
            let s: usize = s.trim().parse().map_err(|_| bad())?;
            let c: usize = c.trim().parse().map_err(|_| bad())?;
            if s == 0 {
                return Err(bad());
            }
            hist.add(s, c);
        }
        Ok(hist)
    }

    pub fn add(&mut self, size: usize, count: usize) {
        assert!(size >= 1, "graph sizes start at 1");
        if count > 0 {
            *self.counts.entry(size).or_default() += count;
        }
    }

    pub fn count(&self, size: usize) -> usize {
        self.counts.get(&size).copied().unwrap_or(0)
    }

    /// `(size, count)` pairs in ascending size order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn s_max_observed(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn num_graphs(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn total_nodes(&self) -> usize {
        self.iter().map(|(s, c)| s * c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Most frequent size, smallest on ties.
    pub fn mode(&self) -> Option<usize> {
        self.iter()
            .fold(None, |best: Option<(usize, usize)>, (s, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((s, c)),
            })
            .map(|(s, _)| s)
    }

    /// All sizes expanded, one entry per graph, ascending.
    pub fn sizes(&self) -> Vec<usize> {
        self.iter()
            .flat_map(|(s, c)| std::iter::repeat_n(s, c))
            .collect()
    }
}
