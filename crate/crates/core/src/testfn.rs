//! Test-function classes the kernels are folded against, and the folding
//! operators. A test function is a product of Robin heat kernels
//! p_R(tau_i; z_i, y_i) on legs 2..s and half-line characteristic functions
//! on the rest; the Diff(j) variant replaces factor j by the difference
//! p_R(tau_j; z_j, y_j) - p_R(tau_j; z1, y_j).
//!
//! Folding collapses delta clusters analytically, with the strong Dirac
//! convention: a collapsed coordinate sitting exactly at the wall
//! contributes weight 1/2. Smooth factors integrate on the grid.

use crate::error::{Error, Result};
use crate::grid::GridHalfLine;
use crate::heatkernel::{pr, pr_diff, RobinConstant};
use crate::kernel::{MomentumChannel, NPointKernel, SmoothFactor};
use crate::sum::NeumaierSum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestVariant {
    Plain,
    /// Diff(j) with the spec's 1-based leg index, 2 <= j <= s.
    Diff(usize),
}

/// Product test function over legs 2..n (1-based): p_R factors on legs
/// 2..s, the half-line characteristic function beyond.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub n: usize,
    /// Widths tau_2..tau_s (so s = taus.len() + 1).
    pub taus: Vec<f64>,
    /// Anchors y_2..y_s.
    pub anchors: Vec<f64>,
    pub c: RobinConstantRepr,
    pub variant: TestVariant,
}

/// Serializable mirror of `RobinConstant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RobinConstantRepr {
    Finite(f64),
    Dirichlet,
}

impl From<RobinConstantRepr> for RobinConstant {
    fn from(r: RobinConstantRepr) -> Self {
        match r {
            RobinConstantRepr::Finite(c) => RobinConstant::Finite(c),
            RobinConstantRepr::Dirichlet => RobinConstant::Dirichlet,
        }
    }
}

/// Width floor: sharper test functions approach delta functions the grid
/// cannot resolve.
pub const TAU_FLOOR_FACTOR: f64 = 1e-6;

impl TestFunctionSpec {
    pub fn new(
        n: usize,
        taus: Vec<f64>,
        anchors: Vec<f64>,
        c: RobinConstantRepr,
        variant: TestVariant,
        mass: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("need n >= 2 legs, got {n}")));
        }
        if taus.len() != anchors.len() {
            return Err(Error::shape("taus and anchors must pair up".to_string()));
        }
        let s = taus.len() + 1;
        if s > n {
            return Err(Error::domain(format!("s = {s} exceeds leg count {n}")));
        }
        let floor = TAU_FLOOR_FACTOR / (mass * mass);
        for &tau in &taus {
            if !(tau >= floor) {
                return Err(Error::domain(format!(
                    "tau = {tau} below the resolvable floor {floor:.3e}"
                )));
            }
        }
        if anchors.iter().any(|&y| y < 0.0) {
            return Err(Error::domain("anchors must be >= 0".to_string()));
        }
        if let TestVariant::Diff(j) = variant {
            if !(2..=s).contains(&j) {
                return Err(Error::domain(format!("Diff({j}) needs 2 <= j <= s = {s}")));
            }
        }
        RobinConstant::from(c).validate()?;
        Ok(TestFunctionSpec { n, taus, anchors, c, variant })
    }

    /// Number of p_R-carrying legs including the root slot (s >= 1).
    pub fn s(&self) -> usize {
        self.taus.len() + 1
    }

    /// Smallest width tau = inf tau_{2,s}; infinity when s = 1.
    pub fn tau_min(&self) -> f64 {
        self.taus.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Factor carried by 1-based leg `leg` (2 <= leg <= n) at coordinate z,
    /// with the root coordinate z1 supplied for the Diff variant.
    pub fn factor(&self, leg: usize, z: f64, z1: f64) -> Result<f64> {
        debug_assert!((2..=self.n).contains(&leg));
        let s = self.s();
        if leg > s {
            return Ok(1.0); // characteristic function of the half-line
        }
        let tau = self.taus[leg - 2];
        let y = self.anchors[leg - 2];
        let c = RobinConstant::from(self.c);
        match self.variant {
            TestVariant::Diff(j) if j == leg => pr_diff(tau, z, z1, y, c),
            _ => pr(tau, z, y, c),
        }
    }

    /// Full product over legs 2..n. `z` lists z_2..z_n.
    pub fn eval(&self, z: &[f64], z1: f64) -> Result<f64> {
        if z.len() != self.n - 1 {
            return Err(Error::shape(format!(
                "expected {} coordinates z_2..z_n, got {}",
                self.n - 1,
                z.len()
            )));
        }
        let mut prod = 1.0;
        for (i, &zi) in z.iter().enumerate() {
            if zi < 0.0 {
                return Err(Error::domain("test-function coordinates must be >= 0"));
            }
            prod *= self.factor(i + 2, zi, z1)?;
        }
        Ok(prod)
    }
}

/// Strong Dirac convention: weight of a cluster whose collapsed companions
/// sit at the wall.
#[inline]
fn collapse_weight(rep_is_zero: bool, collapsed: usize) -> f64 {
    if rep_is_zero {
        0.5f64.powi(collapsed as i32)
    } else {
        1.0
    }
}

fn term_moment(r: usize, z1: f64, rep_of_moment_leg: f64) -> f64 {
    if r == 0 {
        1.0
    } else {
        (z1 - rep_of_moment_leg).powi(r as i32)
    }
}

/// Fold the kernel with the test function and an optional moment factor
/// (z1 - z_i)^r at the 1-based leg `moment_leg`, returning z1 |-> value on
/// every grid node. `channel` selects the stored momentum configuration.
pub fn fold(
    kernel: &NPointKernel,
    spec: &TestFunctionSpec,
    r: usize,
    moment_leg: usize,
    grid: &GridHalfLine,
    channel: MomentumChannel,
) -> Result<Vec<f64>> {
    (0..grid.len()).map(|iz| fold_at(kernel, spec, r, moment_leg, grid, channel, iz)).collect()
}

/// Single-evaluation variant of `fold` at grid node `iz`.
pub fn fold_at(
    kernel: &NPointKernel,
    spec: &TestFunctionSpec,
    r: usize,
    moment_leg: usize,
    grid: &GridHalfLine,
    channel: MomentumChannel,
    iz: usize,
) -> Result<f64> {
    if kernel.n != spec.n {
        return Err(Error::shape(format!(
            "kernel has {} legs, test function {}",
            kernel.n, spec.n
        )));
    }
    if r > 3 {
        return Err(Error::domain(format!("moment power r = {r} exceeds 3")));
    }
    if r > 0 && !(2..=spec.n).contains(&moment_leg) {
        return Err(Error::domain(format!(
            "moment leg {moment_leg} outside 2..={} for r > 0",
            spec.n
        )));
    }
    if channel == MomentumChannel::DPSquared && !kernel.has_channel(channel) {
        return Err(Error::Channel(format!(
            "kernel ({}, {}) does not store the d/dp^2 channel",
            kernel.l, kernel.n
        )));
    }
    let z1 = grid.nodes[iz];
    let mut acc = NeumaierSum::new();
    for term in kernel.terms_in_channel(channel) {
        let clusters = term.pattern.clusters();
        match clusters.len() {
            1 => {
                // Everything collapses onto z1.
                if r > 0 {
                    continue; // (z1 - z1)^r = 0
                }
                let mut v = term.smooth.at1(iz) * collapse_weight(iz == 0, clusters[0].len() - 1);
                for &leg in &clusters[0][1..] {
                    v *= spec.factor(leg + 1, z1, z1)?;
                }
                acc.add(v);
            }
            2 => {
                // Cluster 0 contains leg 0 (patterns sort by minimal leg).
                let root_c = &clusters[0];
                let other_c = &clusters[1];
                let mut root_fac = collapse_weight(iz == 0, root_c.len() - 1);
                for &leg in &root_c[1..] {
                    root_fac *= spec.factor(leg + 1, z1, z1)?;
                }
                let moment_in_other =
                    r > 0 && other_c.binary_search(&(moment_leg - 1)).is_ok();
                if r > 0 && !moment_in_other {
                    continue; // moment leg collapsed onto z1
                }
                let mut inner = NeumaierSum::new();
                for (j, (&zj, &wj)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
                    let mut v = wj
                        * term.smooth.at2(iz, j)
                        * collapse_weight(j == 0, other_c.len() - 1);
                    if v == 0.0 {
                        continue;
                    }
                    for &leg in other_c.iter() {
                        v *= spec.factor(leg + 1, zj, z1)?;
                    }
                    if moment_in_other {
                        v *= term_moment(r, z1, zj);
                    }
                    inner.add(v);
                }
                acc.add(root_fac * inner.total());
            }
            more => {
                return Err(Error::shape(format!(
                    "fold supports terms with at most 2 clusters, found {more}"
                )))
            }
        }
    }
    Ok(acc.total())
}

/// Double-root folding: (z1, z2) |-> (z1-z2)^3 \int dz_{3..n} L Phi_{s-1}.
/// The spec's taus/anchors attach to legs 3..s here. Returns a row-major
/// (n_grid x n_grid) table; for n = 2 no integration is performed.
pub fn fold_f12(
    kernel: &NPointKernel,
    spec: &TestFunctionSpec,
    grid: &GridHalfLine,
    channel: MomentumChannel,
) -> Result<Vec<f64>> {
    if kernel.n != spec.n {
        return Err(Error::shape(format!(
            "kernel has {} legs, test function {}",
            kernel.n, spec.n
        )));
    }
    if kernel.n < 2 {
        return Err(Error::shape("F12 folding needs n >= 2".to_string()));
    }
    let ng = grid.len();
    let mut out = vec![0.0; ng * ng];
    for term in kernel.terms_in_channel(channel) {
        let clusters = term.pattern.clusters();
        // Legs 0 and 1 in the same cluster: the cubic prefactor kills the
        // delta exactly.
        if clusters[0].binary_search(&1).is_ok() {
            continue;
        }
        if clusters.len() != 2 {
            return Err(Error::shape(
                "F12 folding supports 2-cluster terms with split roots".to_string(),
            ));
        }
        let (c0, c1) = (&clusters[0], &clusters[1]);
        debug_assert!(c1.binary_search(&1).is_ok());
        for (i1, &za) in grid.nodes.iter().enumerate() {
            for (i2, &zb) in grid.nodes.iter().enumerate() {
                let cubic = (za - zb).powi(3);
                if cubic == 0.0 {
                    continue;
                }
                let mut v = term.smooth.at2(i1, i2)
                    * collapse_weight(i1 == 0, c0.len() - 1)
                    * collapse_weight(i2 == 0, c1.len() - 1);
                // Legs >= 2 collapsed onto either root pick up test factors
                // with the F12 offset (factors attach to legs 3..s).
                for &leg in c0.iter().skip(1) {
                    v *= f12_factor(spec, leg, za, za)?;
                }
                for &leg in c1.iter() {
                    if leg == 1 {
                        continue;
                    }
                    v *= f12_factor(spec, leg, zb, za)?;
                }
                out[i1 * ng + i2] += cubic * v;
            }
        }
    }
    Ok(out)
}

/// Leg factor for F12 folds: 0-based kernel leg `leg >= 2` maps to the
/// (leg+1)-th 1-based coordinate; p_R factors sit on legs 3..s.
fn f12_factor(spec: &TestFunctionSpec, leg: usize, z: f64, z1: f64) -> Result<f64> {
    let s = spec.s();
    let one_based = leg + 1; // kernel leg index in 1-based counting
    if one_based < 3 || one_based > s + 1 {
        return Ok(1.0);
    }
    let idx = one_based - 3; // taus[0] belongs to leg 3
    if idx >= spec.taus.len() {
        return Ok(1.0);
    }
    let tau = spec.taus[idx];
    let y = spec.anchors[idx];
    let c = RobinConstant::from(spec.c);
    match spec.variant {
        TestVariant::Diff(j) if j == one_based => pr_diff(tau, z, z1, y, c),
        _ => pr(tau, z, y, c),
    }
}

/// Convenience: the zero-filled d/dp^2 companion of a smooth factor, used
/// by kernels whose p^2 channel vanishes structurally.
pub fn zero_like(s: &SmoothFactor) -> SmoothFactor {
    let mut z = s.clone();
    z.scale(0.0);
    z
}
