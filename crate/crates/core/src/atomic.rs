//! Semi-classical double-Λ medium.
//!
//! Two Λ systems share the ground states |1⟩ and |2⟩ and the excited state
//! |3⟩. The weak probe and signal drive |1⟩↔|3⟩, the two strong controls drive
//! |2⟩↔|3⟩. All rates are in units of the excited-state decay rate (Γ = 1 in
//! the shipped preset) and the cell length is normalized to one.
//!
//! The probe polarization is the sum of a linear, EIT-like term proportional
//! to the probe field and a four-wave-mixing term proportional to the signal
//! field and carrying the phase factor `exp(i Δφ_FWM)`. Because both terms are
//! linear in the weak fields, the propagated probe is a superposition of a
//! probe-only and an FWM-only contribution; [`dl_interference`] is that
//! superposition written as a phasor sum.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Environment variable naming a directory searched for `<name>.json` presets.
pub const PRESET_DIR_ENV: &str = "DLPHASE_PRESET_DIR";

/// Name of the built-in calibrated preset.
pub const PAPER_DEFAULT: &str = "paper-default";

const PAPER_DEFAULT_JSON: &str = include_str!("../presets/paper-default.json");

/// Control-field amplitudes that, together with [`AtomicParams::paper_default`],
/// give 80 % probe transmission with control 1 alone and 50 % with both.
pub const PAPER_CONTROL1: f64 = 0.022_266_524_314_803_43;
/// Control 2 carries one ninth of the power of control 1 (5 mW against 45 mW).
pub const PAPER_CONTROL2: f64 = PAPER_CONTROL1 / 3.0;

/// Default number of midpoint steps across the cell.
pub const DEFAULT_STEPS: usize = 1000;

/// Parameters of the double-Λ medium.
///
/// Serialized field names follow the usual symbols (`Gamma`, `gamma`,
/// `Delta1`, ...), which is also the preset file format.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicParams {
    /// Excited-state decay rate Γ; sets the unit of all rates.
    #[serde(rename = "Gamma")]
    pub decay_excited: f64,
    /// Decay rate of the ground-state coherence ρ₁₂.
    #[serde(rename = "gamma")]
    pub decay_ground: f64,
    /// One-photon detuning of the probe/control-1 Λ system.
    #[serde(rename = "Delta1")]
    pub detuning1: f64,
    /// One-photon detuning of the signal/control-2 Λ system.
    #[serde(rename = "Delta2")]
    pub detuning2: f64,
    /// Frequency offset between the two Λ systems, always `Delta2 - Delta1`.
    #[serde(rename = "Delta")]
    pub offset: f64,
    pub dip13: f64,
    pub dip23: f64,
    /// Probe optical depth.
    pub alpha_p: f64,
    /// Signal optical depth.
    pub alpha_s: f64,
    pub length: f64,
    pub gamma31: f64,
    pub mu13: f64,
}

impl AtomicParams {
    /// Builds a parameter set with `Delta` derived from the two detunings.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        decay_excited: f64,
        decay_ground: f64,
        detuning1: f64,
        detuning2: f64,
        dip13: f64,
        dip23: f64,
        alpha_p: f64,
        alpha_s: f64,
    ) -> Self {
        AtomicParams {
            decay_excited,
            decay_ground,
            detuning1,
            detuning2,
            offset: detuning2 - detuning1,
            dip13,
            dip23,
            alpha_p,
            alpha_s,
            length: 1.0,
            gamma31: decay_excited,
            mu13: dip13,
        }
    }

    /// The calibrated preset shipped with the crate.
    pub fn paper_default() -> Self {
        serde_json::from_str(PAPER_DEFAULT_JSON).expect("embedded preset is valid JSON")
    }

    /// Resolves a preset by name: the built-in `paper-default`, or
    /// `<dir>/<name>.json` where `dir` comes from `DLPHASE_PRESET_DIR`.
    pub fn preset(name: &str) -> Result<Self> {
        if name == PAPER_DEFAULT {
            return Ok(Self::paper_default());
        }
        let dir = std::env::var_os(PRESET_DIR_ENV).ok_or_else(|| Error::UnknownPreset(name.into()))?;
        let path = Path::new(&dir).join(format!("{name}.json"));
        if !path.is_file() {
            return Err(Error::UnknownPreset(name.into()));
        }
        Self::from_json_file(&path)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: AtomicParams = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.decay_excited,
            self.decay_ground,
            self.detuning1,
            self.detuning2,
            self.offset,
            self.dip13,
            self.dip23,
            self.alpha_p,
            self.alpha_s,
            self.length,
            self.gamma31,
            self.mu13,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite atomic parameter".into()));
        }
        if self.decay_excited <= 0.0 {
            return Err(Error::InvalidParams("Gamma must be positive".into()));
        }
        if self.decay_ground <= 0.0 {
            return Err(Error::InvalidParams("gamma must be positive".into()));
        }
        if self.alpha_p < 0.0 || self.alpha_s < 0.0 {
            return Err(Error::InvalidParams("optical depths must be non-negative".into()));
        }
        if self.length <= 0.0 {
            return Err(Error::InvalidParams("length must be positive".into()));
        }
        if self.mu13 == 0.0 {
            return Err(Error::InvalidParams("mu13 must be non-zero".into()));
        }
        if self.offset != self.detuning2 - self.detuning1 {
            return Err(Error::InvalidParams(format!(
                "Delta = {} but Delta2 - Delta1 = {}",
                self.offset,
                self.detuning2 - self.detuning1
            )));
        }
        Ok(())
    }

    /// `2iΔ₂ + Γ`, the one-photon denominator.
    fn one_photon(&self) -> Complex64 {
        Complex64::new(self.decay_excited, 2.0 * self.detuning2)
    }

    /// `2iΔ + Γ`, the denominator of the control-dressed terms.
    fn dressed(&self) -> Complex64 {
        Complex64::new(self.decay_excited, 2.0 * self.offset)
    }
}

/// Amplitudes and phases of the four input fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSet {
    #[serde(rename = "Ep")]
    pub probe: f64,
    #[serde(rename = "Es")]
    pub signal: f64,
    #[serde(rename = "Ec1")]
    pub control1: f64,
    #[serde(rename = "Ec2")]
    pub control2: f64,
    pub phi_p: f64,
    pub phi_s: f64,
    pub phi_c1: f64,
    pub phi_c2: f64,
}

impl FieldSet {
    /// Probe and signal with the calibrated control amplitudes, all phases zero.
    pub fn calibrated(probe: f64, signal: f64) -> Self {
        FieldSet {
            probe,
            signal,
            control1: PAPER_CONTROL1,
            control2: PAPER_CONTROL2,
            phi_p: 0.0,
            phi_s: 0.0,
            phi_c1: 0.0,
            phi_c2: 0.0,
        }
    }

    /// Relative phase of the generated four-wave mixing and the probe,
    /// `φ_s − φ_p + φ_c2 − φ_c1` (not wrapped).
    pub fn dphi_fwm(&self) -> f64 {
        self.phi_s - self.phi_p + self.phi_c2 - self.phi_c1
    }

    pub fn probe_complex(&self) -> Complex64 {
        Complex64::from_polar(self.probe, self.phi_p)
    }

    pub fn signal_complex(&self) -> Complex64 {
        Complex64::from_polar(self.signal, self.phi_s)
    }

    pub fn validate(&self) -> Result<()> {
        let amps = [self.probe, self.signal, self.control1, self.control2];
        let phases = [self.phi_p, self.phi_s, self.phi_c1, self.phi_c2];
        if amps.iter().chain(&phases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite field value".into()));
        }
        if amps.iter().any(|&a| a < 0.0) {
            return Err(Error::InvalidParams("field amplitudes must be non-negative".into()));
        }
        Ok(())
    }
}

/// Steady-state optical (ρ₁₃) and ground-state (ρ₁₂) coherences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherencePair {
    pub rho13: Complex64,
    pub rho12: Complex64,
}

/// Perturbative steady-state coherences of one Λ system driven by an
/// effective weak Rabi frequency `weak` and strong Rabi frequency `strong`:
///
/// ```text
/// ρ₁₃ = iΩᵢ/(2iΔ₂+Γ) − Ωᵢ|Ωⱼ|²/(γ(2iΔ₂+Γ)²)
/// ρ₁₂ = iΩᵢΩⱼ*/(γ(2iΔ₂+Γ)²)
/// ```
///
/// Meaningful when |weak| ≪ |strong| and |strong|² ≪ γ|2iΔ₂+Γ|; neither is
/// enforced.
pub fn steady_state_coherences(
    params: &AtomicParams,
    weak: Complex64,
    strong: Complex64,
) -> Result<CoherencePair> {
    let d = params.one_photon();
    if params.decay_ground == 0.0 {
        return Err(Error::Singular("ground-state decay rate gamma is zero"));
    }
    if d == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular("2iDelta2 + Gamma vanishes"));
    }
    let gamma = params.decay_ground;
    let d2 = d * d;
    let rho13 = I * weak / d - weak * strong.norm_sqr() / (gamma * d2);
    let rho12 = I * weak * strong.conj() / (gamma * d2);
    Ok(CoherencePair { rho13, rho12 })
}

/// Coefficients of the output polarizability: `P(ω_p) = e^{iφ_p}(linear·|E_p| +
/// fwm·|E_s|·e^{iΔφ_FWM})`, and symmetrically for the signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationCoefficients {
    /// Probe-only (EIT-like) coefficient.
    pub linear: Complex64,
    /// Four-wave-mixing coefficient.
    pub fwm: Complex64,
}

pub fn polarization_coefficients(params: &AtomicParams, fields: &FieldSet) -> Result<PolarizationCoefficients> {
    let d2 = params.one_photon();
    let dd = params.dressed();
    if params.decay_ground == 0.0 {
        return Err(Error::Singular("ground-state decay rate gamma is zero"));
    }
    if d2 == Complex64::new(0.0, 0.0) || dd == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular("resonance denominator vanishes"));
    }
    let dressed = params.dip13 * params.dip23 * params.dip23 / (params.decay_ground * dd * dd);
    let controls = fields.control1 * fields.control1 + fields.control2 * fields.control2;
    Ok(PolarizationCoefficients {
        linear: I * params.dip13 / d2 + dressed * controls,
        fwm: dressed * fields.control1 * fields.control2,
    })
}

/// Output polarizabilities `(P(ω_p), P(ω_s))`.
///
/// The signal's mixing phase is taken as `−Δφ_FWM`, the phase of light
/// generated at the signal frequency by the probe and both controls.
pub fn polarizabilities(params: &AtomicParams, fields: &FieldSet) -> Result<(Complex64, Complex64)> {
    let c = polarization_coefficients(params, fields)?;
    let dphi = fields.dphi_fwm();
    let probe = Complex64::from_polar(1.0, fields.phi_p)
        * (c.linear * fields.probe + c.fwm * fields.signal * Complex64::from_polar(1.0, dphi));
    let signal = Complex64::from_polar(1.0, fields.phi_s)
        * (c.linear * fields.signal + c.fwm * fields.probe * Complex64::from_polar(1.0, -dphi));
    Ok((probe, signal))
}

/// Integrates the steady-state propagation equations
/// `∂E/∂z = i(αγ₃₁/2Lμ₁₃)·P(ω)` for probe and signal across the cell with the
/// explicit midpoint rule. Control fields pass through undepleted.
///
/// Output phases are unwrapped continuously along z.
pub fn propagate_fields(params: &AtomicParams, input: &FieldSet, steps: usize) -> Result<FieldSet> {
    if steps == 0 {
        return Err(Error::InvalidParams("steps must be at least 1".into()));
    }
    params.validate()?;
    input.validate()?;
    let scale = params.gamma31 / (2.0 * params.length * params.mu13);
    let kp = I * params.alpha_p * scale;
    let ks = I * params.alpha_s * scale;
    let h = params.length / steps as f64;

    let drive = |ep: Complex64, es: Complex64| -> Result<(Complex64, Complex64)> {
        let f = FieldSet {
            probe: ep.norm(),
            signal: es.norm(),
            phi_p: ep.arg(),
            phi_s: es.arg(),
            ..*input
        };
        let (pp, ps) = polarizabilities(params, &f)?;
        Ok((kp * pp, ks * ps))
    };

    let mut ep = input.probe_complex();
    let mut es = input.signal_complex();
    let (mut phi_p, mut phi_s) = (input.phi_p, input.phi_s);
    for k in 0..steps {
        let (dp, ds) = drive(ep, es)?;
        let (mp, ms) = drive(ep + 0.5 * h * dp, es + 0.5 * h * ds)?;
        let np = ep + h * mp;
        let ns = es + h * ms;
        if !(np.re.is_finite() && np.im.is_finite() && ns.re.is_finite() && ns.im.is_finite()) {
            return Err(Error::Divergence { z: (k + 1) as f64 * h });
        }
        phi_p = advance_phase(phi_p, ep, np);
        phi_s = advance_phase(phi_s, es, ns);
        ep = np;
        es = ns;
    }
    Ok(FieldSet {
        probe: ep.norm(),
        signal: es.norm(),
        phi_p,
        phi_s,
        ..*input
    })
}

fn advance_phase(current: f64, old: Complex64, new: Complex64) -> f64 {
    if new.norm_sqr() == 0.0 {
        return current;
    }
    if old.norm_sqr() == 0.0 {
        return new.arg();
    }
    current + phase::wrap(new.arg() - old.arg())
}

/// Linear map from input `(E_p, E_s)` to output probe and signal, obtained by
/// propagating unit inputs. `matrix[out][in]`, index 0 = probe, 1 = signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix {
    pub matrix: [[Complex64; 2]; 2],
}

impl TransferMatrix {
    /// Output probe for complex probe and signal inputs.
    pub fn probe_out(&self, probe: Complex64, signal: Complex64) -> Complex64 {
        self.matrix[0][0] * probe + self.matrix[0][1] * signal
    }
}

/// Probe/signal transfer matrix of the medium for the controls in `fields`.
///
/// Input probe and signal phases are referenced to zero, so the control phases
/// alone set the mixing phase of the unit responses.
pub fn transfer_matrix(params: &AtomicParams, fields: &FieldSet, steps: usize) -> Result<TransferMatrix> {
    let unit = |probe: f64, signal: f64| -> Result<[Complex64; 2]> {
        let f = FieldSet { probe, signal, phi_p: 0.0, phi_s: 0.0, ..*fields };
        let out = propagate_fields(params, &f, steps)?;
        Ok([out.probe_complex(), out.signal_complex()])
    };
    let from_probe = unit(1.0, 0.0)?;
    let from_signal = unit(0.0, 1.0)?;
    Ok(TransferMatrix {
        matrix: [[from_probe[0], from_signal[0]], [from_probe[1], from_signal[1]]],
    })
}

/// Signal-to-probe input amplitude ratio for which the double-Λ output
/// amplitude equals the input probe amplitude at the measured FWM phase
/// `dphi_fwm`.
pub fn unit_gain_signal_ratio(transfer: &TransferMatrix, dphi_fwm: f64) -> Result<f64> {
    let t_pp = transfer.matrix[0][0].norm();
    let t_ps = transfer.matrix[0][1].norm();
    if t_pp == 0.0 || t_ps == 0.0 {
        return Err(Error::InvalidParams("medium has no probe or no FWM response".into()));
    }
    // |1 + r e^{iφ}|² · |t_pp|² = 1
    let c = dphi_fwm.cos();
    let disc = c * c + 1.0 / (t_pp * t_pp) - 1.0;
    if disc < 0.0 {
        return Err(Error::InvalidParams("unit gain unreachable at this phase".into()));
    }
    let ratio = -c + disc.sqrt();
    if ratio < 0.0 {
        return Err(Error::InvalidParams("unit gain unreachable at this phase".into()));
    }
    Ok(ratio * t_pp / t_ps)
}

/// Intensity transmission `|E_p(L)|²/|E_p(0)|²` of a probe sent without signal.
pub fn probe_transmission(params: &AtomicParams, control1: f64, control2: f64, steps: usize) -> Result<f64> {
    let fields = FieldSet {
        probe: 1.0,
        signal: 0.0,
        control1,
        control2,
        phi_p: 0.0,
        phi_s: 0.0,
        phi_c1: 0.0,
        phi_c2: 0.0,
    };
    let out = propagate_fields(params, &fields, steps)?;
    Ok(out.probe * out.probe)
}

/// Phase of an output field, `atan2(Im, Re)` in (−π, π].
pub fn output_phase(field: Complex64) -> Result<f64> {
    if field.norm_sqr() == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    Ok(phase::arg(field.re, field.im))
}

/// Probe-only amplitude `E_E`, FWM-only amplitude `E_F` and their relative phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasorDecomposition {
    pub e_probe: f64,
    pub e_fwm: f64,
    pub dphi_fwm: f64,
}

/// Double-Λ output relative to the probe-only output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlOutput {
    /// Phase shift Δφ_DL in (−π, π]; reported as 0 when `degenerate`.
    pub dphi_dl: f64,
    /// `|E_E + E_F e^{iΔφ_FWM}| / E_E`.
    pub amplitude: f64,
    /// Set when the two contributions cancel and the phase is undefined.
    pub degenerate: bool,
}

/// Relative amplitude below which the double-Λ phase is reported as undefined.
const DEGENERATE_AMPLITUDE: f64 = 1e-12;

/// Double-Λ phase and normalized amplitude by phasor addition of the
/// probe-only and FWM contributions.
///
/// ```
/// use dlphase::atomic::{dl_interference, PhasorDecomposition};
/// use std::f64::consts::PI;
/// // FWM twice as strong as the probe and in antiphase: the output flips sign.
/// let out = dl_interference(&PhasorDecomposition { e_probe: 1.0, e_fwm: 2.0, dphi_fwm: PI }).unwrap();
/// assert!((out.dphi_dl - PI).abs() < 1e-12);
/// assert!((out.amplitude - 1.0).abs() < 1e-12);
/// ```
pub fn dl_interference(ph: &PhasorDecomposition) -> Result<DlOutput> {
    if !(ph.e_probe > 0.0) {
        return Err(Error::Normalization);
    }
    if ph.e_fwm < 0.0 || !ph.e_fwm.is_finite() || !ph.dphi_fwm.is_finite() {
        return Err(Error::InvalidParams("FWM amplitude must be finite and non-negative".into()));
    }
    let dphi = phase::wrap(ph.dphi_fwm);
    let sum = Complex64::new(ph.e_probe, 0.0) + Complex64::from_polar(ph.e_fwm, dphi);
    let amplitude = sum.norm() / ph.e_probe;
    if amplitude < DEGENERATE_AMPLITUDE {
        return Ok(DlOutput { dphi_dl: 0.0, amplitude, degenerate: true });
    }
    Ok(DlOutput { dphi_dl: phase::arg(sum.re, sum.im), amplitude, degenerate: false })
}

/// Closed-form normalized interference amplitude
/// `√(1 + r² + 2r·cos Δφ_FWM)` with `r = E_F/E_E`.
pub fn interference_amplitude(ratio: f64, dphi_fwm: f64) -> f64 {
    (1.0 + ratio * ratio + 2.0 * ratio * dphi_fwm.cos()).max(0.0).sqrt()
}

/// Result of fitting the medium to two probe transmissions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub params: AtomicParams,
    pub control1: f64,
    pub control2: f64,
    /// Transmission with control 1 only.
    pub single_control: f64,
    /// Transmission with both controls.
    pub both_controls: f64,
}

/// Fits optical depth and control strength so that the probe transmission is
/// `single` with control 1 alone and `both` once control 2 (at
/// `control_ratio` times control 1's amplitude) is added.
///
/// The optical depth (shared by probe and signal) is found by bisection for
/// each trial control amplitude; the control amplitude is bracketed by a
/// coarse upward scan and then bisected.
pub fn calibrate_transmissions(
    base: &AtomicParams,
    single: f64,
    both: f64,
    control_ratio: f64,
    steps: usize,
) -> Result<Calibration> {
    if !(0.0 < both && both < single && single < 1.0) {
        return Err(Error::InvalidParams("need 0 < both < single < 1".into()));
    }
    let depth_for = |control1: f64| -> Result<AtomicParams> {
        let with = |alpha: f64| AtomicParams { alpha_p: alpha, alpha_s: alpha, ..*base };
        let mut hi = 1.0;
        while probe_transmission(&with(hi), control1, 0.0, steps)? > single {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::InvalidParams("control 1 alone does not absorb the probe".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if probe_transmission(&with(mid), control1, 0.0, steps)? > single {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(with(0.5 * (lo + hi)))
    };
    let excess = |control1: f64| -> Result<f64> {
        let p = depth_for(control1)?;
        Ok(probe_transmission(&p, control1, control1 * control_ratio, steps)? - both)
    };

    // Bracket the first crossing of the two-control target from weak controls upward.
    let mut lo = 1e-3;
    let mut lo_excess = excess(lo)?;
    if lo_excess <= 0.0 {
        return Err(Error::InvalidParams("two-control target reached at the weakest control".into()));
    }
    let mut hi = lo;
    loop {
        hi *= 1.1;
        if hi > 10.0 {
            return Err(Error::InvalidParams("two-control transmission target not bracketed".into()));
        }
        if excess(hi)? <= 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let e = excess(mid)?;
        if e > 0.0 {
            lo = mid;
            lo_excess = e;
        } else {
            hi = mid;
        }
    }
    let _ = lo_excess;
    let control1 = 0.5 * (lo + hi);
    let control2 = control1 * control_ratio;
    let params = depth_for(control1)?;
    Ok(Calibration {
        params,
        control1,
        control2,
        single_control: probe_transmission(&params, control1, 0.0, steps)?,
        both_controls: probe_transmission(&params, control1, control2, steps)?,
    })
}

/// Uncalibrated starting point for [`calibrate_transmissions`]: D1-line
/// detunings (probe 400 MHz red of resonance, second Λ 80 MHz to the blue)
/// in units of Γ/2π = 5.75 MHz, unit dipoles, γ = 10⁻³ Γ.
pub fn paper_base_params() -> AtomicParams {
    let gamma_mhz = 5.75;
    let detuning1 = -400.0 / gamma_mhz;
    let offset = 80.0 / gamma_mhz;
    AtomicParams::new(1.0, 1e-3, detuning1, detuning1 + offset, 1.0, 1.0, 0.0, 0.0)
}
