use mane_core::sft::{dynamic_ball_transitions, entropy, SampledSystem};
use mane_core::shadowing::model::{cat_grid_next, cat_lambda, grid_point};

fn cat_grid(n: usize) -> SampledSystem<mane_core::TorusPoint> {
    let points = (0..n * n).map(|k| grid_point(n, k / n, k % n)).collect();
    let next = cat_grid_next(n).into_iter().map(Some).collect();
    SampledSystem::new(points, next).unwrap()
}

fn coded_rate(t: usize, n: usize) -> f64 {
    let c = dynamic_ball_transitions(&cat_grid(n), t, 0.05).unwrap();
    assert_eq!(c.sft.alphabet_size(), c.spanning_size);
    entropy(&c.sft).value / (2 * t) as f64
}

#[test]
fn cat_map_coding_entropy_short_window() {
    let h = coded_rate(1, 300);
    let target = cat_lambda().ln();
    assert!((h - target).abs() <= 0.25 * target, "h/2T = {h}, log λ = {target}");
}

// About 11 s in release-like builds.
#[test]
#[ignore]
fn cat_map_coding_entropy_longer_window() {
    let h = coded_rate(2, 800);
    let target = cat_lambda().ln();
    assert!((h - target).abs() <= 0.1 * target, "h/2T = {h}, log λ = {target}");
}
