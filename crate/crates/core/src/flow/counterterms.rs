//! Relevant-term projections of the two- and four-point kernels: the five
//! counterterm functions a, s, d, b, c of the boundary coordinate, obtained
//! by folding with the s = 1 test function and the stated moment powers.

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::grid::GridHalfLine;
use crate::kernel::MomentumChannel;
use crate::testfn::{fold, RobinConstantRepr, TestFunctionSpec, TestVariant};
use serde::{Deserialize, Serialize};

/// The five counterterm functions on the grid. Units: a ~ mass^2, s ~ mass,
/// d and b dimensionless, c a dimensionless coupling shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountertermSet {
    pub a: Vec<f64>,
    pub s: Vec<f64>,
    pub d: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl CountertermSet {
    pub fn max_abs(&self) -> f64 {
        [&self.a, &self.s, &self.d, &self.b, &self.c]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

fn s1_spec(n: usize, mass: f64) -> TestFunctionSpec {
    TestFunctionSpec::new(n, vec![], vec![], RobinConstantRepr::Finite(0.0), TestVariant::Plain, mass)
        .expect("s = 1 spec is always valid")
}

/// Extract a = \int L_{l,2}, s = \int (z1 - z2) L_{l,2},
/// d = \int (z1 - z2)^2 L_{l,2}, b = \int dL_{l,2}/dp^2 and
/// c = \int L_{l,4}, all as functions of z1 on the grid.
pub fn extract_counterterms(
    state: &FlowState,
    l: usize,
    grid: &GridHalfLine,
    mass: f64,
) -> Result<CountertermSet> {
    let two = state.kernel(l, 2)?;
    let four = state.kernel(l, 4)?;
    let spec2 = s1_spec(2, mass);
    let spec4 = s1_spec(4, mass);
    let zeros = vec![0.0; grid.len()];
    let (a, s, d, b);
    if two.terms.is_empty() {
        // The tree-level two-point kernel vanishes identically.
        a = zeros.clone();
        s = zeros.clone();
        d = zeros.clone();
        b = zeros.clone();
    } else {
        a = fold(two, &spec2, 0, 2, grid, MomentumChannel::Zero)?;
        s = fold(two, &spec2, 1, 2, grid, MomentumChannel::Zero)?;
        d = fold(two, &spec2, 2, 2, grid, MomentumChannel::Zero)?;
        if !two.has_channel(MomentumChannel::DPSquared) {
            return Err(Error::Channel(format!(
                "two-point kernel at loop order {l} lacks the d/dp^2 channel needed for b"
            )));
        }
        b = fold(two, &spec2, 0, 2, grid, MomentumChannel::DPSquared)?;
    }
    let c = fold(four, &spec4, 0, 2, grid, MomentumChannel::Zero)?;
    Ok(CountertermSet { a, s, d, b, c })
}
