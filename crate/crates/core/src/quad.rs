//! One-dimensional quadrature: fixed Gauss–Legendre / Gauss–Lobatto panel
//! rules for the half-line grid and the log-mapped fast paths, and an
//! adaptive Gauss–Kronrod 15(7) driver for oracles and fallbacks.

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// 7-point Gauss, 15-point Kronrod pair on [-1, 1] (QUADPACK qk15 constants).
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.000_000_000_000_000_0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_84,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Single Gauss–Kronrod 15 panel. Returns (kronrod value, |K15 - G7| error proxy).
fn gk15_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = NeumaierSum::new();
    let mut gauss = NeumaierSum::new();
    kron.add(WGK15[7] * fc);
    gauss.add(WG7[3] * fc);
    for j in 0..7 {
        let x = h * XGK15[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        kron.add(WGK15[j] * (f1 + f2));
        if j % 2 == 1 {
            gauss.add(WG7[j / 2] * (f1 + f2));
        }
    }
    let k = kron.total() * h;
    let g = gauss.total() * h;
    ((k), (k - g).abs())
}

fn gk_recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    whole: f64,
    depth: usize,
    out: &mut NeumaierSum,
    err: &mut NeumaierSum,
) {
    let (v, e) = gk15_panel(f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs()).max(1e-300);
    if e <= tol || depth >= 48 || (b - a).abs() < 1e-15 * (a.abs() + b.abs() + 1.0) {
        out.add(v);
        err.add(e);
        return;
    }
    let m = 0.5 * (a + b);
    // Children inherit half the tolerance budget; left to right keeps the
    // accumulation order deterministic.
    gk_recurse(f, a, m, 0.5 * abs_tol, rel_tol, whole, depth + 1, out, err);
    gk_recurse(f, m, b, 0.5 * abs_tol, rel_tol, whole, depth + 1, out, err);
}

/// Adaptive GK15 over explicit segment edges. Each segment is refined by
/// bisection; pass breakpoints at known feature scales, since bisection alone
/// cannot locate structure far below the node spacing.
pub fn adaptive_gk_segments<F: Fn(f64) -> f64>(
    f: F,
    edges: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if edges.len() < 2 || edges.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("adaptive_gk_segments needs >= 2 finite edges"));
    }
    let mut whole = 0.0;
    for w in edges.windows(2) {
        whole += gk15_panel(&f, w[0], w[1]).0;
    }
    let n = (edges.len() - 1) as f64;
    let mut out = NeumaierSum::new();
    let mut err = NeumaierSum::new();
    for w in edges.windows(2) {
        gk_recurse(&f, w[0], w[1], abs_tol / n, rel_tol, whole, 0, &mut out, &mut err);
    }
    let value = out.total();
    let err_est = err.total();
    let tol = abs_tol.max(rel_tol * value.abs());
    if err_est > tol.max(1e-300) * 50.0 {
        return Err(Error::Numerical {
            context: format!(
                "adaptive GK15 on [{:.3e}, {:.3e}] did not converge",
                edges[0],
                edges[edges.len() - 1]
            ),
            achieved: err_est,
            requested: tol,
        });
    }
    Ok((value, err_est))
}

/// Adaptive GK15 on [a, b] with a uniform 16-way pre-split.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let edges: Vec<f64> = (0..=16).map(|i| a + (b - a) * i as f64 / 16.0).collect();
    adaptive_gk_segments(f, &edges, abs_tol, rel_tol)
}

/// Gauss–Legendre 8 on [-1, 1]: (node, weight) for the positive half.
const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_3),
];

/// Gauss–Legendre 16 on [-1, 1]: positive half.
const GL16: [(f64, f64); 8] = [
    (0.095_012_509_837_637_44, 0.189_450_610_455_068_5),
    (0.281_603_550_779_258_9, 0.182_603_415_044_923_6),
    (0.458_016_777_657_227_4, 0.169_156_519_395_002_5),
    (0.617_876_244_402_643_7, 0.149_595_988_816_576_73),
    (0.755_404_408_355_003_0, 0.124_628_971_255_533_87),
    (0.865_631_202_387_831_7, 0.095_158_511_682_492_79),
    (0.944_575_023_073_232_6, 0.062_253_523_938_647_89),
    (0.989_400_934_991_649_9, 0.027_152_459_411_754_095),
];

/// Gauss–Lobatto 6 on [-1, 1]: full node/weight list (endpoints included).
pub const LOBATTO6: [(f64, f64); 6] = [
    (-1.0, 0.066_666_666_666_666_67),
    (-0.765_055_323_929_464_7, 0.378_474_956_297_846_8),
    (-0.285_231_516_480_645_3, 0.554_858_377_035_486_4),
    (0.285_231_516_480_645_3, 0.554_858_377_035_486_4),
    (0.765_055_323_929_464_7, 0.378_474_956_297_846_8),
    (1.0, 0.066_666_666_666_666_67),
];

/// Fill (nodes, weights) for an n-point Gauss–Legendre rule mapped to [a, b].
fn gl_mapped(half: &[(f64, f64)], a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    // Ascending order: negative half reversed, then positive half.
    for &(x, w) in half.iter().rev() {
        nodes.push(c - h * x);
        weights.push(h * w);
    }
    for &(x, w) in half {
        nodes.push(c + h * x);
        weights.push(h * w);
    }
}

/// Fixed composite Gauss–Legendre rule over explicit panel edges.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    /// 8-point Gauss–Legendre per panel.
    pub fn gl8(edges: &[f64]) -> Self {
        let mut nodes = Vec::with_capacity(8 * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            gl_mapped(&GL8, w[0], w[1], &mut nodes, &mut weights);
        }
        PanelRule { nodes, weights }
    }

    /// 16-point Gauss–Legendre per panel.
    pub fn gl16(edges: &[f64]) -> Self {
        let mut nodes = Vec::with_capacity(16 * (edges.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in edges.windows(2) {
            gl_mapped(&GL16, w[0], w[1], &mut nodes, &mut weights);
        }
        PanelRule { nodes, weights }
    }

    /// Geometric panel edges from `a` to `b` (a > 0) in log space.
    pub fn log_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
        assert!(a > 0.0 && b > a && panels > 0);
        let la = a.ln();
        let step = (b.ln() - la) / panels as f64;
        (0..=panels).map(|i| (la + step * i as f64).exp()).collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.total()
    }
}

/// Radial loop-momentum rule for integrals (1/2 pi^2) \int_0^inf k^2 dk f(k)
/// whose integrands carry a Gaussian cutoff exp(-k^2/Lambda^2) with Lambda
/// anywhere in [lambda_lo, lambda_hi]. Composite GL8 on log-k panels of
/// roughly 0.55 e-folds keeps every member of that family at ~1e-9 relative.
#[derive(Debug, Clone)]
pub struct RadialRule {
    /// k = 0 is prepended as an evaluation node (weight 0) so kernels that
    /// store momentum-resolved data have the zero-momentum slice in slot 0.
    pub k: Vec<f64>,
    /// Quadrature weights including the k^2/(2 pi^2) measure; weight[0] = 0.
    pub w: Vec<f64>,
}

impl RadialRule {
    pub fn new(lambda_lo: f64, lambda_hi: f64) -> Self {
        assert!(lambda_lo > 0.0 && lambda_hi >= lambda_lo);
        let k_min = 1e-4 * lambda_lo;
        let k_max = 6.5 * lambda_hi;
        let panels = ((k_max / k_min).ln() / 0.55).ceil() as usize;
        let rule = PanelRule::gl8(&PanelRule::log_edges(k_min, k_max, panels));
        let mut k = Vec::with_capacity(rule.nodes.len() + 1);
        let mut w = Vec::with_capacity(rule.nodes.len() + 1);
        k.push(0.0);
        w.push(0.0);
        let measure = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            k.push(x);
            w.push(wt * x * x * measure);
        }
        RadialRule { k, w }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// (1/2 pi^2) \int k^2 f(k) dk with f sampled on the rule's nodes.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = NeumaierSum::new();
        for (&k, &w) in self.k.iter().zip(&self.w) {
            if w != 0.0 {
                acc.add(w * f(k));
            }
        }
        acc.total()
    }
}
