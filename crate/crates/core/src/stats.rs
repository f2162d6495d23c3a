//! Small regression helpers shared by the measurement code.

/// Least-squares line through (x, y): returns (intercept, slope).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need two points for a fit");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Fit log y = a + b log x; returns (a, b).
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Fit y ≈ C e^{-r x}; returns (C, r).
pub fn exp_decay_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (a, b) = linear_fit(xs, &ly);
    (a.exp(), -b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let (a, b) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decay_recovered() {
        let xs = [1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * (-0.7 * x).exp()).collect();
        let (c, r) = exp_decay_fit(&xs, &ys);
        assert!((c - 3.0).abs() < 1e-9 && (r - 0.7).abs() < 1e-12);
    }
}
