//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them. Run with `--nocapture` to see the lines.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use dlphase::atomic::{
    dl_interference, probe_transmission, steady_state_coherences, AtomicParams, FieldSet, PhasorDecomposition,
    DEFAULT_STEPS, PAPER_CONTROL1, PAPER_CONTROL2,
};
use dlphase::config::RunConfig;
use dlphase::extract::{bin_edges, bin_index, bin_records, extract_trace, Case, ExtractOptions};
use dlphase::pipeline::{self, RunPaths};
use dlphase::synth::{synth_burst, NoiseConfig, PulseSchedule, ScanConfig};
use dlphase::tomography::{
    coherent_dm, fidelity, mean_photon, mle_reconstruct, purity, wigner, wigner_point, default_axis, DensityMatrix,
    MleOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

/// Amplitude of the double-Λ output relative to the probe-only output,
/// written directly in terms of the fitted amplitudes.
fn amplitude_formula(e_e: f64, e_f: f64, dphi: f64) -> f64 {
    ((e_e * e_e + e_f * e_f) / (e_e * e_e) + 2.0 * e_f / e_e * dphi.cos()).sqrt()
}

fn phasor_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let draws: Vec<(f64, f64, f64)> =
        (0..10_000).map(|_| (rng.random_range(0.01..5.0), rng.random_range(0.0..5.0), rng.random_range(-PI..PI))).collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_phase = 0.0f64;
    for &(e_e, e_f, dphi) in &draws {
        let out = dl_interference(&PhasorDecomposition { e_probe: e_e, e_fwm: e_f, dphi_fwm: dphi }).unwrap();
        worst = worst.max((out.amplitude - amplitude_formula(e_e, e_f, dphi)).abs());
        if !out.degenerate {
            let r = e_f / e_e;
            let phase = (r * dphi.sin()).atan2(1.0 + r * dphi.cos());
            worst_phase = worst_phase.max(common::wrap(out.dphi_dl - phase).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        1,
        "phasor model equivalence",
        worst <= 1e-12 && secs < 1.0,
        format!("max |ΔA| = {worst:.2e} (max |Δφ_DL| = {worst_phase:.2e}) over 10^4 draws in {secs:.3} s"),
    )
}

fn bloch_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (params, weak, strong) = common::weak_drive_draw(&mut rng);
        let model = steady_state_coherences(&params, weak, strong).unwrap().rho13;
        let ode = common::bloch_rho31(params.decay_ground, 1.0, params.detuning2, weak, strong);
        worst = worst.max((model - ode).norm() / ode.norm());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        2,
        "Bloch-model oracle",
        worst < 0.01 && secs < 30.0,
        format!("max relative error {worst:.2e} over 100 weak-drive draws in {secs:.1} s"),
    )
}

fn calibration() -> Outcome {
    let p = AtomicParams::paper_default();
    let single = probe_transmission(&p, PAPER_CONTROL1, 0.0, DEFAULT_STEPS).unwrap();
    let both = probe_transmission(&p, PAPER_CONTROL1, PAPER_CONTROL2, DEFAULT_STEPS).unwrap();
    outcome(
        3,
        "calibration reproduction",
        (single - 0.80).abs() <= 0.02 && (both - 0.50).abs() <= 0.02,
        format!("T(control 1) = {single:.4}, T(both) = {both:.4}"),
    )
}

fn phase_errors(trace: &dlphase::synth::HomodyneTrace) -> (Vec<f64>, Vec<f64>, usize) {
    let ex = extract_trace(trace, 1.0 / trace.scan.lo_amplitude, &ExtractOptions::default()).unwrap();
    let truth = trace.truth.as_ref().unwrap();
    let mut e_fwm = Vec::new();
    let mut e_dl = Vec::new();
    for r in ex.records.iter().filter(|r| r.case == Case::ProbeOnly) {
        e_fwm.push(common::wrap(r.dphi_fwm - truth[r.scan_id].dphi_fwm));
        e_dl.push(common::wrap(r.dphi_dl - truth[r.scan_id].dphi_dl));
    }
    (e_fwm, e_dl, ex.excluded_shots)
}

fn round_trip() -> Outcome {
    let p = AtomicParams::paper_default();
    let sched = PulseSchedule::default();
    let drifting = NoiseConfig { vacuum_std: 0.0, ..NoiseConfig::default() };

    // Noiseless amplitudes, drifting phases, full desk-scale burst.
    let start = Instant::now();
    let clean = synth_burst(&p, &FieldSet::calibrated(0.71, 0.71 * 1.94), &sched, &ScanConfig::default(), &drifting, 1).unwrap();
    let (f, d, excluded) = phase_errors(&clean);
    let bins = bin_records(&extract_trace(&clean, 1.0 / clean.scan.lo_amplitude, &ExtractOptions::default()).unwrap().records, 10).unwrap();
    let e2e = start.elapsed().as_secs_f64();
    let clean_max = f.iter().chain(&d).fold(0.0f64, |m, e| m.max(e.abs()));
    let clean_ok = excluded == 0 && f.len() == clean.truth.as_ref().unwrap().len() && clean_max < 1e-3 && !bins.is_empty();

    // Default noise: shot noise per pulse plus phase drift.
    let noisy = synth_burst(&p, &FieldSet::calibrated(2.0, 3.8), &sched, &ScanConfig::default(), &NoiseConfig::default(), 2).unwrap();
    let (f, d, _) = phase_errors(&noisy);
    let (rms_f, rms_d) = (common::rms(&f), common::rms(&d));

    // Same noise at single-photon amplitudes, for reference only.
    let dim = synth_burst(&p, &FieldSet::calibrated(0.71, 0.71 * 1.94), &sched, &ScanConfig::default(), &NoiseConfig::default(), 3).unwrap();
    let (fd, dd, _) = phase_errors(&dim);

    outcome(
        4,
        "round-trip phase extraction",
        clean_ok && rms_f <= 0.1 && rms_d <= 0.1 && e2e < 60.0,
        format!(
            "noiseless max error {clean_max:.2e} rad; noisy RMS fwm {rms_f:.3} dl {rms_d:.3} rad (|α_p| = 2); \
             at |α_p| = 0.71 RMS fwm {:.3} dl {:.3} rad; desk-scale burst {e2e:.1} s",
            common::rms(&fd),
            common::rms(&dd)
        ),
    )
}

fn tomography_oracle(monotone: &mut Vec<bool>) -> Outcome {
    let alpha = Complex64::new(0.71, 0.0);
    let data = common::sample_coherent(alpha, 10_000, 505);
    let start = Instant::now();
    let res = mle_reconstruct(&data, &MleOptions { cutoff: 10, ..MleOptions::default() }).unwrap();
    let secs = start.elapsed().as_secs_f64();
    monotone.push(res.monotone);
    let truth = coherent_dm(alpha, 10).unwrap();
    let f = fidelity(&truth, &res.rho).unwrap();
    let pur = purity(&res.rho);
    let n = mean_photon(&res.rho);
    let n_true = 0.71f64 * 0.71;
    outcome(
        5,
        "tomography oracle",
        f >= 0.99 && pur >= 0.98 && ((n - n_true) / n_true).abs() <= 0.05 && secs < 60.0,
        format!("fidelity {f:.4}, purity {pur:.4}, mean photon {n:.4} (true {n_true:.4}), {} iterations in {secs:.1} s", res.iterations),
    )
}

fn analytic_fidelity() -> Outcome {
    let coh = coherent_dm(Complex64::new(0.71, 0.0), 15).unwrap();
    let vac = DensityMatrix::vacuum(15).unwrap();
    let f = fidelity(&coh, &vac).unwrap();
    let expect = (-0.71f64 * 0.71).exp();
    outcome(6, "analytic fidelity check", (f - expect).abs() <= 1e-3, format!("F = {f:.6}, exp(−|α|²) = {expect:.6}"))
}

fn wigner_checks() -> Outcome {
    let w0 = wigner_point(&DensityMatrix::vacuum(10).unwrap(), 0.0, 0.0);
    let w1 = wigner_point(&DensityMatrix::fock(1, 10).unwrap(), 0.0, 0.0);
    let target = 1.0 / (2.0 * PI);
    let ax = default_axis();
    let norms: Vec<f64> = [
        DensityMatrix::vacuum(10).unwrap(),
        DensityMatrix::fock(3, 10).unwrap(),
        coherent_dm(Complex64::new(0.71, 0.4), 10).unwrap(),
    ]
    .iter()
    .map(|rho| wigner(rho, &ax, &ax).integral())
    .collect();
    let worst_norm = norms.iter().fold(0.0f64, |m, n| m.max((n - 1.0).abs()));
    outcome(
        7,
        "Wigner checks",
        (w0 - target).abs() <= 1e-6 && (w1 + target).abs() <= 1e-6 && worst_norm <= 1e-4,
        format!("W_vac(0,0) − 1/2π = {:.1e}, W_1(0,0) + 1/2π = {:.1e}, max |∫W − 1| = {worst_norm:.1e}", w0 - target, w1 + target),
    )
}

fn end_to_end(monotone: &mut Vec<bool>) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let paths = RunPaths::new(dir.path().join("run"));
    let mut cfg = RunConfig::preset("paper-default").unwrap();
    cfg.seed = Some(42);
    cfg.bootstrap = 20;
    let start = Instant::now();
    let summary = pipeline::run_all(&cfg, &paths).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let reports = pipeline::load_reports(&paths, cfg.n_bins).unwrap();
    monotone.extend(reports.iter().map(|r| r.monotone));

    let min_overlap = reports.iter().map(|r| r.coherent_overlap.value).fold(f64::INFINITY, f64::min);
    let overlap_ok = reports.len() == 3 * cfg.n_bins && min_overlap >= 0.90;

    let dl_fid: Vec<(usize, f64)> = reports
        .iter()
        .filter(|r| r.case == Some(Case::DoubleLambda))
        .map(|r| (r.bin.unwrap(), r.fidelity_vs_input.unwrap().value))
        .collect();
    let fid_of = |k: usize| dl_fid.iter().find(|b| b.0 == k).map_or(f64::NAN, |b| b.1);
    let best = dl_fid.iter().copied().fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let plus_two = bin_index(2.0, cfg.n_bins);
    let minus_two = bin_index(-2.0, cfg.n_bins);
    let near_zero = [bin_index(-1e-9, cfg.n_bins), bin_index(1e-9, cfg.n_bins)];
    // The gain depends on Δφ_FWM only through its cosine, so the bins at ±2 rad
    // hold equivalent states; either may carry the sampled maximum.
    let peak_ok = best.0 == plus_two || best.0 == minus_two;
    let dip_ok = near_zero.iter().all(|&k| fid_of(k) < fid_of(plus_two) && fid_of(k) < fid_of(minus_two));

    let locus = |c: Case| summary.loci.iter().find(|l| l.case == c).unwrap().clone();
    let fwm = locus(Case::FwmOnly);
    let dl = locus(Case::DoubleLambda);
    let fwm_ok = fwm.max_radius_deviation <= 0.05;
    let dl_offset_ok = dl.center_offset > 0.05 * dl.mean_radius && dl.max_radius_deviation > 0.05;

    let (lo2, hi2) = bin_edges(plus_two, cfg.n_bins);
    outcome(
        8,
        "calibrated end-to-end reproduction",
        overlap_ok && peak_ok && dip_ok && fwm_ok && dl_offset_ok && secs < 600.0,
        format!(
            "min overlap {min_overlap:.4} over {} reports; DL fidelity max {:.4} in bin {} (bin ({lo2:.2}, {hi2:.2}] holds {:.4}, \
             mirror bin {:.4}), near 0: {:.4}/{:.4}; FWM radius spread {:.1}%, DL center offset {:.3} (radius {:.3}), \
             DL radius spread {:.1}%; {secs:.0} s",
            reports.len(),
            best.1,
            best.0,
            fid_of(plus_two),
            fid_of(minus_two),
            fid_of(near_zero[0]),
            fid_of(near_zero[1]),
            100.0 * fwm.max_radius_deviation,
            dl.center_offset,
            dl.mean_radius,
            100.0 * dl.max_radius_deviation
        ),
    )
}

#[test]
fn acceptance() {
    let mut monotone = Vec::new();
    let mut results = vec![phasor_equivalence(), bloch_oracle(), calibration(), round_trip()];
    results.push(tomography_oracle(&mut monotone));
    results.push(analytic_fidelity());
    results.push(wigner_checks());
    results.push(end_to_end(&mut monotone));
    let all_monotone = !monotone.is_empty() && monotone.iter().all(|&m| m);
    results.push(outcome(
        9,
        "MLE likelihood monotonicity",
        all_monotone && cfg!(debug_assertions),
        format!("{} reconstructions monotone: {all_monotone}; debug assertions: {}", monotone.len(), cfg!(debug_assertions)),
    ));
    for r in &results {
        println!("{} criterion {}: {} ({})", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.detail);
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
