mod common;

use common::weak_drive_draw;
use dlphase::atomic::steady_state_coherences;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn linear_term_matches_bloch_integration() {
    // Without a strong field the closed form is exact to first order.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let (params, weak, _) = weak_drive_draw(&mut rng);
        let model = steady_state_coherences(&params, weak, Complex64::new(0.0, 0.0)).unwrap().rho13;
        let ode = common::bloch_rho31(params.decay_ground, 1.0, params.detuning2, weak, Complex64::new(0.0, 0.0));
        assert!((model - ode).norm() / ode.norm() < 1e-6, "{model} vs {ode}");
    }
}

#[test]
fn weak_drive_coherence_within_one_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (params, weak, strong) = weak_drive_draw(&mut rng);
        let model = steady_state_coherences(&params, weak, strong).unwrap().rho13;
        let ode = common::bloch_rho31(params.decay_ground, 1.0, params.detuning2, weak, strong);
        worst = worst.max((model - ode).norm() / ode.norm());
    }
    assert!(worst < 0.01, "worst relative error {worst}");
}

/// The closed form's second-order term is −2i times the Lindblad result;
/// the 1% agreement above relies on that term being small in the weak-drive
/// regime.
#[test]
fn second_order_term_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let (params, weak, strong) = weak_drive_draw(&mut rng);
        let lin = steady_state_coherences(&params, weak, Complex64::new(0.0, 0.0)).unwrap().rho13;
        let full = steady_state_coherences(&params, weak, strong).unwrap().rho13;
        let ode = common::bloch_rho31(params.decay_ground, 1.0, params.detuning2, weak, strong);
        let ratio = (ode - lin) / (full - lin);
        assert!((ratio - Complex64::new(0.0, 0.5)).norm() < 0.01, "ratio {ratio}");
    }
}
