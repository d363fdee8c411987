//! Re-derives the `paper-default` preset and control amplitudes.
//!
//! `cargo run -p dlphase --example calibrate > presets/paper-default.json`
use dlphase::atomic::{calibrate_transmissions, paper_base_params, DEFAULT_STEPS};

fn main() {
    let cal = calibrate_transmissions(&paper_base_params(), 0.8, 0.5, 1.0 / 3.0, DEFAULT_STEPS)
        .expect("calibration brackets the targets");
    println!("{}", serde_json::to_string_pretty(&cal.params).unwrap());
    eprintln!(
        "control1 = {:?}, control2 = {:?}, T(c1) = {:.6}, T(c1+c2) = {:.6}",
        cal.control1, cal.control2, cal.single_control, cal.both_controls
    );
}
