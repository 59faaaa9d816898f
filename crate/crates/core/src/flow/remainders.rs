//! Taylor remainders of the relevant-term decomposition, both as the
//! integral formulas (t-derivatives of the test function against the
//! kernel) and as the difference (full fold) - (relevant reconstruction).
//! The two evaluations are independent routes to the same object and must
//! agree; `remainder_consistency` reports the worst deviation.

use crate::error::{Error, Result};
use crate::flow::counterterms::CountertermSet;
use crate::flow::FlowState;
use crate::grid::GridHalfLine;
use crate::heatkernel::{dt_pr_derivative, RobinConstant};
use crate::kernel::{MomentumChannel, NPointKernel};
use crate::quad::adaptive_gk;
use crate::sum::NeumaierSum;
use crate::testfn::{fold, TestFunctionSpec, TestVariant};

/// The three remainder functions of z1 on the grid.
#[derive(Debug, Clone)]
pub struct TaylorRemainders {
    pub l2: Vec<f64>,
    pub dp2_l2: Vec<f64>,
    pub l4: Vec<f64>,
}

fn spec_leg(spec: &TestFunctionSpec, leg: usize) -> Option<(f64, f64)> {
    // (tau, anchor) carried by the 1-based leg, if it is a p_R leg.
    if leg >= 2 && leg <= spec.s() {
        Some((spec.taus[leg - 2], spec.anchors[leg - 2]))
    } else {
        None
    }
}

/// \int_0^1 dt (1-t)^2/2 d^3/dt^3 p_R(tau; t u + (1-t) v, y).
fn third_order_t_integral(tau: f64, u: f64, v: f64, y: f64, c: RobinConstant) -> Result<f64> {
    if u == v {
        return Ok(0.0);
    }
    let (val, _) = adaptive_gk(
        |t| {
            0.5 * (1.0 - t) * (1.0 - t)
                * dt_pr_derivative(3, tau, t, u, v, y, c).unwrap_or(0.0)
        },
        0.0,
        1.0,
        1e-300,
        1e-12,
    )?;
    Ok(val)
}

/// \int_0^1 dt d/dt p_R(tau; t u + (1-t) v, y).
fn first_order_t_integral(tau: f64, u: f64, v: f64, y: f64, c: RobinConstant) -> Result<f64> {
    if u == v {
        return Ok(0.0);
    }
    let (val, _) = adaptive_gk(
        |t| dt_pr_derivative(1, tau, t, u, v, y, c).unwrap_or(0.0),
        0.0,
        1.0,
        1e-300,
        1e-12,
    )?;
    Ok(val)
}

#[inline]
fn collapse_weight(rep_is_zero: bool, collapsed: usize) -> f64 {
    if rep_is_zero {
        0.5f64.powi(collapsed as i32)
    } else {
        1.0
    }
}

/// Two-point remainder by the integral formula, for the requested channel.
fn l2_integral_route(
    kernel: &NPointKernel,
    spec: &TestFunctionSpec,
    grid: &GridHalfLine,
    channel: MomentumChannel,
) -> Result<Vec<f64>> {
    let (tau, y) =
        spec_leg(spec, 2).ok_or_else(|| Error::shape("two-point spec needs a p_R leg"))?;
    let c = RobinConstant::from(spec.c);
    let n = grid.len();
    let mut out = vec![0.0; n];
    for term in kernel.terms_in_channel(channel) {
        let clusters = term.pattern.clusters();
        match clusters.len() {
            1 => continue, // the third t-derivative carries (z2 - z1)^3 = 0
            2 => {
                for (iz, &z1) in grid.nodes.iter().enumerate() {
                    let mut acc = NeumaierSum::new();
                    for (j, &zj) in grid.nodes.iter().enumerate() {
                        let w = grid.weights[j] * term.smooth.at2(iz, j);
                        if w == 0.0 {
                            continue;
                        }
                        acc.add(w * third_order_t_integral(tau, zj, z1, y, c)?);
                    }
                    out[iz] += acc.total();
                }
            }
            _ => return Err(Error::shape("remainders support <= 2 clusters".to_string())),
        }
    }
    Ok(out)
}

/// Four-point remainder by the telescoped integral formula.
fn l4_integral_route(
    kernel: &NPointKernel,
    spec: &TestFunctionSpec,
    grid: &GridHalfLine,
) -> Result<Vec<f64>> {
    let c = RobinConstant::from(spec.c);
    let n = grid.len();
    let mut out = vec![0.0; n];
    let factor_at = |leg: usize, z: f64| -> Result<f64> { spec.factor(leg, z, z) };
    for term in kernel.terms_in_channel(MomentumChannel::Zero) {
        let clusters = term.pattern.clusters();
        match clusters.len() {
            1 => continue, // all coordinates collapse onto z1: each t-integral vanishes
            2 => {
                let root_c = &clusters[0];
                let other_c = &clusters[1];
                for (iz, &z1) in grid.nodes.iter().enumerate() {
                    let root_w = collapse_weight(iz == 0, root_c.len() - 1);
                    let mut acc = NeumaierSum::new();
                    for (jz, &v) in grid.nodes.iter().enumerate() {
                        let base = grid.weights[jz]
                            * term.smooth.at2(iz, jz)
                            * collapse_weight(jz == 0, other_c.len() - 1);
                        if base == 0.0 {
                            continue;
                        }
                        // Coordinate of each 1-based leg under this pattern.
                        let coord = |leg: usize| -> f64 {
                            if other_c.binary_search(&(leg - 1)).is_ok() {
                                v
                            } else {
                                z1
                            }
                        };
                        // Telescoped bracket: sum over p_R legs j of
                        // prod_{f<j} phi_f(z1) * [t-integral of phi_j] *
                        // prod_{i>j} phi_i(z_i).
                        let mut bracket = 0.0;
                        for j in 2..=spec.s() {
                            let (tau_j, y_j) = spec_leg(spec, j).unwrap();
                            let zj = coord(j);
                            if zj == z1 {
                                continue;
                            }
                            let mut piece = first_order_t_integral(tau_j, zj, z1, y_j, c)?;
                            for f in 2..j {
                                piece *= factor_at(f, z1)?;
                            }
                            for i in (j + 1)..=spec.n {
                                piece *= spec.factor(i, coord(i), z1)?;
                            }
                            bracket += piece;
                        }
                        acc.add(base * bracket);
                    }
                    out[iz] += root_w * acc.total();
                }
            }
            _ => return Err(Error::shape("remainders support <= 2 clusters".to_string())),
        }
    }
    Ok(out)
}

/// Remainders by the integral formulas.
pub fn taylor_remainders(
    state: &FlowState,
    l: usize,
    spec2: &TestFunctionSpec,
    spec4: &TestFunctionSpec,
    grid: &GridHalfLine,
) -> Result<TaylorRemainders> {
    if spec2.n != 2 || spec4.n != 4 {
        return Err(Error::shape("remainders need an n = 2 and an n = 4 test function"));
    }
    let two = state.kernel(l, 2)?;
    let four = state.kernel(l, 4)?;
    let n = grid.len();
    let (l2, dp2_l2);
    if two.terms.is_empty() {
        l2 = vec![0.0; n];
        dp2_l2 = vec![0.0; n];
    } else {
        l2 = l2_integral_route(two, spec2, grid, MomentumChannel::Zero)?;
        dp2_l2 = l2_integral_route(two, spec2, grid, MomentumChannel::DPSquared)?;
    }
    let l4 = l4_integral_route(four, spec4, grid)?;
    Ok(TaylorRemainders { l2, dp2_l2, l4 })
}

/// Remainders as (full fold) - (relevant reconstruction), using the
/// extracted counterterm projections. The reconstruction carries the Taylor
/// coefficients: a phi(z1) - s phi'(z1) + (d/2) phi''(z1) for the two-point
/// function and c prod_i phi_i(z1) for the four-point one.
pub fn remainders_by_difference(
    state: &FlowState,
    l: usize,
    spec2: &TestFunctionSpec,
    spec4: &TestFunctionSpec,
    grid: &GridHalfLine,
    cts: &CountertermSet,
) -> Result<TaylorRemainders> {
    let two = state.kernel(l, 2)?;
    let four = state.kernel(l, 4)?;
    let c = RobinConstant::from(spec2.c);
    let (tau2, y2) =
        spec_leg(spec2, 2).ok_or_else(|| Error::shape("two-point spec needs a p_R leg"))?;
    let n = grid.len();

    let mut l2 = vec![0.0; n];
    let mut dp2_l2 = vec![0.0; n];
    if !two.terms.is_empty() {
        let full = fold(two, spec2, 0, 2, grid, MomentumChannel::Zero)?;
        let full_p2 = fold(two, spec2, 0, 2, grid, MomentumChannel::DPSquared)?;
        for (iz, &z1) in grid.nodes.iter().enumerate() {
            let phi = spec2.factor(2, z1, z1)?;
            // d/dz and d^2/dz^2 of p_R via the t-parameterization.
            let dphi = dt_pr_derivative(1, tau2, 0.0, z1 + 1.0, z1, y2, c)?;
            let ddphi = dt_pr_derivative(2, tau2, 0.0, z1 + 1.0, z1, y2, c)?;
            l2[iz] = full[iz] - (cts.a[iz] * phi - cts.s[iz] * dphi + 0.5 * cts.d[iz] * ddphi);
            dp2_l2[iz] = full_p2[iz] - cts.b[iz] * phi;
        }
    }

    let full4 = fold(four, spec4, 0, 2, grid, MomentumChannel::Zero)?;
    let mut l4 = vec![0.0; n];
    for (iz, &z1) in grid.nodes.iter().enumerate() {
        let mut prod = 1.0;
        for leg in 2..=spec4.n {
            prod *= spec4.factor(leg, z1, z1)?;
        }
        l4[iz] = full4[iz] - cts.c[iz] * prod;
    }
    Ok(TaylorRemainders { l2, dp2_l2, l4 })
}

/// Worst relative disagreement between the two remainder routes, scaled by
/// the magnitude of the folded kernels.
pub fn remainder_consistency(
    state: &FlowState,
    l: usize,
    spec2: &TestFunctionSpec,
    spec4: &TestFunctionSpec,
    grid: &GridHalfLine,
    cts: &CountertermSet,
) -> Result<f64> {
    if !matches!(spec2.variant, TestVariant::Plain) || !matches!(spec4.variant, TestVariant::Plain)
    {
        return Err(Error::domain("remainder consistency uses plain test functions"));
    }
    let ia = taylor_remainders(state, l, spec2, spec4, grid)?;
    let ib = remainders_by_difference(state, l, spec2, spec4, grid, cts)?;
    let four = state.kernel(l, 4)?;
    let full4 = fold(four, spec4, 0, 2, grid, MomentumChannel::Zero)?;
    let scale4 = full4.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-30);
    let two = state.kernel(l, 2)?;
    let scale2 = if two.terms.is_empty() {
        1.0
    } else {
        fold(two, spec2, 0, 2, grid, MomentumChannel::Zero)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-30)
    };
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        worst = worst.max((ia.l2[i] - ib.l2[i]).abs() / scale2);
        worst = worst.max((ia.dp2_l2[i] - ib.dp2_l2[i]).abs() / scale2);
        worst = worst.max((ia.l4[i] - ib.l4[i]).abs() / scale4);
    }
    Ok(worst)
}
