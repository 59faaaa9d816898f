//! Numerical check harnesses for the boundedness and convergence claims:
//! ratios of folded kernels to the dimension-counted global weight factors
//! across the cutoff ladder, and Cauchy differences of flow outputs over a
//! geometric ladder of UV cutoffs.

use crate::error::Result;
use crate::fit::{linear_fit, loglog_slope};
use crate::flow::counterterms::extract_counterterms;
use crate::flow::FlowRun;
use crate::grid::GridHalfLine;
use crate::kernel::MomentumChannel;
use crate::testfn::{fold, RobinConstantRepr, TestFunctionSpec, TestVariant};
use crate::trees::global_weight;
use serde::{Deserialize, Serialize};

/// Configuration of the boundedness (Theorem-1 style) check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Test-function widths and anchors for legs 2..s (s = taus.len() + 1).
    pub taus: Vec<f64>,
    pub anchors: Vec<f64>,
    /// Robin constant of the test functions.
    pub c: f64,
    /// Bound-inflation delta of the weight factors.
    pub delta: f64,
    /// Grid node indices probed for z1.
    pub z1_probes: Vec<usize>,
    /// A ratio-growth fit above this degree flags a violation.
    pub growth_cap: f64,
}

/// One measured ratio sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundEntry {
    pub l: usize,
    pub n: usize,
    pub r: usize,
    pub w: usize,
    pub lambda: f64,
    pub lambda0: f64,
    /// max over z1 probes of |folded| / ((Lambda+m)^{4-n-|w|-r} F_{s,l}).
    pub max_ratio: f64,
}

/// Boundedness report: ratio samples, the fitted growth of the envelope in
/// log((Lambda+m)/m), and the across-ladder growth factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub entries: Vec<BoundEntry>,
    /// Envelope fit: ratio ~ intercept + slope * log((Lambda+m)/m), per (l, n).
    pub fitted_growth: Vec<((usize, usize), f64, f64)>,
    /// max ratio at the largest Lambda0 over max ratio at the smallest.
    pub ladder_growth_factor: f64,
    pub violation: bool,
}

fn spec_for(n: usize, config: &BoundConfig, mass: f64) -> Result<TestFunctionSpec> {
    let s = (config.taus.len() + 1).min(n);
    TestFunctionSpec::new(
        n,
        config.taus[..s - 1].to_vec(),
        config.anchors[..s - 1].to_vec(),
        RobinConstantRepr::Finite(config.c),
        TestVariant::Plain,
        mass,
    )
}

/// Classes checked by the harness: (l, n, r, |w|).
const CLASSES: [(usize, usize, usize, usize); 6] =
    [(0, 4, 0, 0), (1, 2, 0, 0), (1, 2, 1, 0), (1, 2, 2, 0), (1, 2, 0, 2), (1, 4, 0, 0)];

/// Theorem-1 style boundedness harness over a ladder of flow runs (one per
/// Lambda0). Never fails on a bound violation; the report carries the flag.
pub fn bound_check(runs: &[FlowRun], grid: &GridHalfLine, config: &BoundConfig) -> Result<BoundReport> {
    let mut entries = Vec::new();
    let mass = runs[0].params.m;
    for run in runs {
        for state in &run.states {
            let lambda = state.lambda;
            for &(l, n, r, w) in CLASSES.iter() {
                let spec = spec_for(n, config, mass)?;
                let s = spec.s();
                let kernel = state.kernel(l, n)?;
                let channel =
                    if w == 2 { MomentumChannel::DPSquared } else { MomentumChannel::Zero };
                if w == 2 && !kernel.has_channel(channel) {
                    continue;
                }
                let folded = fold(kernel, &spec, r, 2, grid, channel)?;
                let taus: Vec<(usize, f64)> =
                    (2..=s).map(|k| (k, spec.taus[k - 2])).collect();
                let anchors: Vec<(usize, f64)> =
                    (2..=s).map(|k| (k, spec.anchors[k - 2])).collect();
                let mut max_ratio: f64 = 0.0;
                for &iz in &config.z1_probes {
                    let fval = folded[iz].abs();
                    if fval == 0.0 {
                        continue;
                    }
                    let weight = global_weight(
                        lambda.max(run.params.lambda_min),
                        run.params.lambda0,
                        &taus,
                        s,
                        l,
                        grid.nodes[iz],
                        &anchors,
                        config.delta,
                        grid,
                        16,
                    )?;
                    if weight <= 0.0 {
                        continue;
                    }
                    let power = 4.0 - n as f64 - w as f64 - r as f64;
                    let dim = (lambda + mass).powf(power);
                    max_ratio = max_ratio.max(fval / (dim * weight));
                }
                entries.push(BoundEntry { l, n, r, w, lambda, lambda0: run.params.lambda0, max_ratio });
            }
        }
    }
    // Envelope growth in log((Lambda+m)/m) per (l, n) over all samples.
    let mut fitted_growth = Vec::new();
    for &(l, n) in &[(0usize, 4usize), (1, 2), (1, 4)] {
        let pts: Vec<(f64, f64)> = entries
            .iter()
            .filter(|e| e.l == l && e.n == n && e.max_ratio > 0.0)
            .map(|e| (((e.lambda + mass) / mass).ln(), e.max_ratio))
            .collect();
        if pts.len() >= 2 {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (intercept, slope) = linear_fit(&xs, &ys);
            fitted_growth.push(((l, n), intercept, slope));
        }
    }
    // Across-ladder growth of the one-loop envelope.
    let lam0_min = runs.iter().map(|r| r.params.lambda0).fold(f64::INFINITY, f64::min);
    let lam0_max = runs.iter().map(|r| r.params.lambda0).fold(0.0f64, f64::max);
    let env = |lam0: f64| -> f64 {
        entries
            .iter()
            .filter(|e| e.lambda0 == lam0 && e.l == 1)
            .map(|e| e.max_ratio)
            .fold(0.0f64, f64::max)
    };
    let (lo, hi) = (env(lam0_min), env(lam0_max));
    let ladder_growth_factor = if lo > 0.0 { hi / lo } else { 1.0 };
    let log_ratio = if lam0_min < lam0_max {
        ((lam0_max / mass).ln() / (lam0_min / mass).ln()).powi(2)
    } else {
        1.0
    };
    let violation = ladder_growth_factor > config.growth_cap.max(log_ratio);
    Ok(BoundReport { entries, fitted_growth, ladder_growth_factor, violation })
}

/// One tracked quantity of the convergence (Theorem-2 style) harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub quantity: String,
    pub lambda0s: Vec<f64>,
    /// Probe-norm values per ladder member.
    pub values: Vec<f64>,
    /// |values_{i+1} - values_i| per ladder rung.
    pub diffs: Vec<f64>,
    /// Fitted log-log slope of the differences against Lambda0, when the
    /// differences sit above the numerical floor.
    pub slope: Option<f64>,
    /// All differences at the floor: the quantity is identically convergent.
    pub identically_convergent: bool,
}

/// Convergence harness over the Lambda0 ladder. `lambda_ref` is the scale at
/// which scale-dependent quantities are compared (the renormalization point
/// itself pins the relevant projections to zero).
pub fn convergence_report(
    runs: &[FlowRun],
    grid: &GridHalfLine,
    lambda_ref: f64,
    spec2: &TestFunctionSpec,
    spec4: &TestFunctionSpec,
    spec6: &TestFunctionSpec,
    bulk_index: usize,
) -> Result<Vec<ConvergenceSeries>> {
    let mass = runs[0].params.m;
    let mut series: Vec<(String, Vec<f64>)> = vec![
        ("c1_at_renormalization_point".into(), vec![]),
        ("a1_bulk_at_lambda_ref".into(), vec![]),
        ("folded_L12_at_renormalization_point".into(), vec![]),
        ("c1_at_lambda_ref".into(), vec![]),
        ("folded_L06_at_renormalization_point".into(), vec![]),
        ("folded_L14_remainder_at_renormalization_point".into(), vec![]),
    ];
    let lambda0s: Vec<f64> = runs.iter().map(|r| r.params.lambda0).collect();
    for run in runs {
        let ir = run.state_at(run.params.lambda_min)?;
        let at_ref = run.state_at(lambda_ref)?;
        let cts_ir = extract_counterterms(ir, 1, grid, mass)?;
        let cts_ref = extract_counterterms(at_ref, 1, grid, mass)?;
        // Probe norm: max over the grid.
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        series[0].1.push(norm(&cts_ir.c));
        series[1].1.push(cts_ref.a[bulk_index]);
        let l12 = fold(ir.kernel(1, 2)?, spec2, 0, 2, grid, MomentumChannel::Zero)?;
        // Subtract the reconstruction (identically zero under BPHZ): the
        // tracked object is the folded kernel at the renormalization point.
        series[2].1.push(norm(&l12));
        series[3].1.push(norm(&cts_ref.c));
        let l06 = fold(ir.kernel(0, 6)?, spec6, 0, 2, grid, MomentumChannel::Zero)?;
        series[4].1.push(norm(&l06));
        let l14 = fold(ir.kernel(1, 4)?, spec4, 0, 2, grid, MomentumChannel::Zero)?;
        series[5].1.push(norm(&l14));
    }
    let mut out = Vec::new();
    for (name, values) in series {
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let diffs: Vec<f64> =
            values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let floor = 1e-11 * scale + 1e-300;
        let identically_convergent = diffs.iter().all(|&d| d <= floor);
        let slope = if identically_convergent {
            None
        } else {
            loglog_slope(&lambda0s[..diffs.len()], &diffs, floor).map(|(_, s)| s)
        };
        out.push(ConvergenceSeries {
            quantity: name,
            lambda0s: lambda0s.clone(),
            values,
            diffs,
            slope,
            identically_convergent,
        });
    }
    Ok(out)
}
