//! Small least-squares helpers for the decay-rate, slope and envelope fits
//! used by the bound and convergence reports.

/// Ordinary least squares line y = a + b x. Returns (intercept, slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a line fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Log-log slope fit of |y| against x; pairs with y at or below `floor`
/// are dropped. Returns None if fewer than two usable points survive.
pub fn loglog_slope(xs: &[f64], ys: &[f64], floor: f64) -> Option<(f64, f64)> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if y.abs() > floor && x > 0.0 {
            lx.push(x.ln());
            ly.push(y.abs().ln());
        }
    }
    if lx.len() < 2 {
        return None;
    }
    let (a, b) = linear_fit(&lx, &ly);
    Some((a, b))
}

/// Least-squares fit of y = a + b t with t = log(x), used for envelope
/// growth diagnostics. Returns (a, b).
pub fn log_linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    linear_fit(&lx, ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (a, b) = linear_fit(&xs, &ys);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_power_law() {
        let xs: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let (_, slope) = loglog_slope(&xs, &ys, 0.0).unwrap();
        assert!((slope + 1.5).abs() < 1e-10);
    }

    #[test]
    fn drops_floor_values() {
        let xs = [1.0, 10.0, 100.0];
        let ys = [1e-3, 0.0, 1e-5];
        let (_, slope) = loglog_slope(&xs, &ys, 1e-300).unwrap();
        assert!((slope + 1.0).abs() < 1e-10);
        assert!(loglog_slope(&xs, &[0.0, 0.0, 0.0], 1e-300).is_none());
    }
}
