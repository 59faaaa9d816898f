//! Storage model for the flowed n-point kernels: each kernel is a sum of
//! terms, a term being a delta-cluster pattern over the external legs times
//! a smooth factor sampled on the half-line grid over the cluster
//! representative coordinates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Partition of the leg indices 0..n-1 into clusters. All coordinates in a
/// cluster are collapsed to the cluster representative by delta functions.
/// Clusters are stored sorted by their minimal leg, members ascending, so
/// equal patterns compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterPattern {
    n: usize,
    clusters: Vec<Vec<usize>>,
}

impl ClusterPattern {
    pub fn new(n: usize, mut clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for c in &mut clusters {
            if c.is_empty() {
                return Err(Error::shape("empty cluster"));
            }
            c.sort_unstable();
            for &leg in c.iter() {
                if leg >= n || seen[leg] {
                    return Err(Error::shape(format!(
                        "cluster pattern is not a partition of 0..{n}"
                    )));
                }
                seen[leg] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::shape(format!("cluster pattern misses legs of 0..{n}")));
        }
        clusters.sort_by_key(|c| c[0]);
        Ok(ClusterPattern { n, clusters })
    }

    pub fn n_legs(&self) -> usize {
        self.n
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Index of the cluster containing the given leg.
    pub fn cluster_of(&self, leg: usize) -> usize {
        self.clusters
            .iter()
            .position(|c| c.binary_search(&leg).is_ok())
            .expect("leg out of range")
    }
}

/// Which momentum configuration a term's smooth factor stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentumChannel {
    /// All external momenta zero.
    Zero,
    /// Coefficient of p^2 at zero momentum (the d/dp^2 channel, n = 2 only).
    DPSquared,
    /// Resolved on the radial loop-momentum nodes; slot 0 is k = 0. The
    /// transfer momentum runs through the internal line joining the term's
    /// two clusters.
    LoopResolved,
}

/// Smooth factor sampled on the grid over the cluster representatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SmoothFactor {
    /// One cluster: values over its representative coordinate.
    One(Vec<f64>),
    /// Two clusters: row-major (n x n) over (rep of cluster 0, rep of cluster 1).
    Two { data: Vec<f64>, n: usize },
    /// Two clusters with loop-momentum resolution, symmetric in (i, j):
    /// lower-triangle storage, slice per momentum node. The payload is
    /// shared: the ten six-point splits carry the same chain data.
    TwoK { data: Arc<Vec<f64>>, nk: usize, n: usize },
}

impl SmoothFactor {
    pub fn two(n: usize) -> Self {
        SmoothFactor::Two { data: vec![0.0; n * n], n }
    }

    pub fn two_k(nk: usize, n: usize) -> Self {
        SmoothFactor::TwoK { data: Arc::new(vec![0.0; nk * n * (n + 1) / 2]), nk, n }
    }

    #[inline]
    pub fn at1(&self, i: usize) -> f64 {
        match self {
            SmoothFactor::One(v) => v[i],
            _ => panic!("smooth factor arity mismatch"),
        }
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        match self {
            SmoothFactor::Two { data, n } => data[i * n + j],
            SmoothFactor::TwoK { .. } => self.at2k(0, i, j),
            _ => panic!("smooth factor arity mismatch"),
        }
    }

    #[inline]
    pub fn at2k(&self, ik: usize, i: usize, j: usize) -> f64 {
        match self {
            SmoothFactor::TwoK { data, n, .. } => {
                let (a, b) = if i >= j { (i, j) } else { (j, i) };
                debug_assert!(a < *n);
                data[ik * (n * (n + 1) / 2) + a * (a + 1) / 2 + b]
            }
            _ => panic!("smooth factor arity mismatch"),
        }
    }

    #[inline]
    pub fn set2k(&mut self, ik: usize, i: usize, j: usize, v: f64) {
        match self {
            SmoothFactor::TwoK { data, n, .. } => {
                let (a, b) = if i >= j { (i, j) } else { (j, i) };
                let idx = ik * (*n * (*n + 1) / 2) + a * (a + 1) / 2 + b;
                Arc::make_mut(data)[idx] = v;
            }
            _ => panic!("smooth factor arity mismatch"),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SmoothFactor::One(_) => 1,
            SmoothFactor::Two { .. } | SmoothFactor::TwoK { .. } => 2,
        }
    }

    /// In-place y += a * x over the raw storage (same shape required).
    pub fn axpy(&mut self, a: f64, x: &SmoothFactor) {
        match (self, x) {
            (SmoothFactor::One(y), SmoothFactor::One(x)) => {
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi += a * xi;
                }
            }
            (SmoothFactor::Two { data: y, .. }, SmoothFactor::Two { data: x, .. }) => {
                for (yi, xi) in y.iter_mut().zip(x.iter()) {
                    *yi += a * xi;
                }
            }
            (SmoothFactor::TwoK { data: y, .. }, SmoothFactor::TwoK { data: x, .. }) => {
                for (yi, xi) in Arc::make_mut(y).iter_mut().zip(x.iter()) {
                    *yi += a * xi;
                }
            }
            _ => panic!("smooth factor shape mismatch in axpy"),
        }
    }

    pub fn scale(&mut self, a: f64) {
        match self {
            SmoothFactor::One(v) => v.iter_mut().for_each(|x| *x *= a),
            SmoothFactor::Two { data, .. } => data.iter_mut().for_each(|x| *x *= a),
            SmoothFactor::TwoK { data, .. } => {
                Arc::make_mut(data).iter_mut().for_each(|x| *x *= a)
            }
        }
    }

    pub fn raw(&self) -> &[f64] {
        match self {
            SmoothFactor::One(v) => v,
            SmoothFactor::Two { data, .. } => data,
            SmoothFactor::TwoK { data, .. } => data,
        }
    }
}

/// One delta-cluster term of a kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTerm {
    pub pattern: ClusterPattern,
    pub channel: MomentumChannel,
    pub smooth: SmoothFactor,
}

impl KernelTerm {
    pub fn validate(&self) -> Result<()> {
        if self.pattern.clusters().len() != self.smooth.arity() {
            return Err(Error::shape(format!(
                "term with {} clusters carries a smooth factor of arity {}",
                self.pattern.clusters().len(),
                self.smooth.arity()
            )));
        }
        if self.smooth.raw().iter().any(|v| !v.is_finite()) {
            return Err(Error::shape("smooth factor contains non-finite samples"));
        }
        Ok(())
    }
}

/// A connected amputated n-point kernel at loop order l.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NPointKernel {
    pub l: usize,
    pub n: usize,
    pub terms: Vec<KernelTerm>,
}

impl NPointKernel {
    pub fn new(l: usize, n: usize, terms: Vec<KernelTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
            if t.pattern.n_legs() != n {
                return Err(Error::shape(format!(
                    "term pattern over {} legs in an {n}-point kernel",
                    t.pattern.n_legs()
                )));
            }
        }
        Ok(NPointKernel { l, n, terms })
    }

    pub fn terms_in_channel(&self, channel: MomentumChannel) -> impl Iterator<Item = &KernelTerm> {
        self.terms.iter().filter(move |t| match (t.channel, channel) {
            // Loop-resolved terms expose their k = 0 slice as the
            // zero-momentum configuration.
            (MomentumChannel::LoopResolved, MomentumChannel::Zero) => true,
            (a, b) => a == b,
        })
    }

    pub fn has_channel(&self, channel: MomentumChannel) -> bool {
        self.terms_in_channel(channel).next().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_canonicalizes() {
        let a = ClusterPattern::new(4, vec![vec![2, 3], vec![1, 0]]).unwrap();
        let b = ClusterPattern::new(4, vec![vec![0, 1], vec![3, 2]]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cluster_of(3), 1);
        assert_eq!(a.cluster_of(0), 0);
    }

    #[test]
    fn pattern_rejects_non_partitions() {
        assert!(ClusterPattern::new(3, vec![vec![0, 1]]).is_err());
        assert!(ClusterPattern::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(ClusterPattern::new(3, vec![vec![0], vec![1], vec![4]]).is_err());
    }

    #[test]
    fn twok_symmetric_storage_roundtrip() {
        let mut s = SmoothFactor::two_k(3, 5);
        s.set2k(2, 4, 1, 7.5);
        assert_eq!(s.at2k(2, 4, 1), 7.5);
        assert_eq!(s.at2k(2, 1, 4), 7.5);
        s.set2k(0, 2, 2, -1.0);
        assert_eq!(s.at2(2, 2), -1.0);
    }

    #[test]
    fn kernel_validates_shapes() {
        let pat = ClusterPattern::new(2, vec![vec![0], vec![1]]).unwrap();
        let term = KernelTerm {
            pattern: pat,
            channel: MomentumChannel::Zero,
            smooth: SmoothFactor::One(vec![1.0; 4]),
        };
        assert!(NPointKernel::new(0, 2, vec![term]).is_err());
    }
}
