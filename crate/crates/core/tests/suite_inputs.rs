use mane_core::shadowing::HyperbolicModel;
use mane_core::suites::{periodic_pseudo_orbit, synthetic_profiles};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    // Lengths are multiples of 50, the order of the cat map on the 1/25 grid.
    // Every jump of the generated pseudo-orbit, including the closing one, has size δ.
    #[test]
    fn pseudo_orbit_jumps_have_size_delta(seed in 0u64..500, k in 2i32..5, reps in 1usize..5) {
        let delta = 10f64.powi(-k);
        let m = HyperbolicModel::cat_map();
        let z = periodic_pseudo_orbit(&mut ChaCha8Rng::seed_from_u64(seed), 50 * reps, delta);
        for i in 0..z.len() {
            let jump = m.step(z[i]).distance(&z[(i + 1) % z.len()]);
            prop_assert!((jump - delta).abs() < 1e-9 * delta.max(1e-3), "{jump} vs {delta}");
        }
    }

    #[test]
    fn synthetic_profiles_are_ordered(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = synthetic_profiles(&mut rng, 1.0);
        prop_assert_eq!(f.times.last().copied(), Some(0.0));
        for (a, b) in f.values.iter().zip(&g.values) {
            prop_assert!(a <= b && *a >= 0.0);
        }
    }
}
