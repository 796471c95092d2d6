//! Component estimation for `U^† Q U |0>`: amplitudes from sampling or readout,
//! dominant-component selection, and the ancilla circuits that recover the
//! real and imaginary parts of each component against a zero-amplitude reference.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_4;

use log::warn;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::simulator::{apply_circuit, apply_circuit_embedded, Circuit, Gate1, Rng, StateVector, HADAMARD, S_GATE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutMode {
    /// Every component is read from the statevector and rounded to `10^-eps`.
    #[default]
    ExactReadout,
    /// The set of components is whatever `chi` samples observe; their values
    /// are read from the statevector and rounded.
    SampledSupport,
    /// `|c_j| = sqrt(n_j / chi)` from `chi` samples.
    Shot,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMethod {
    /// Phases read from the statevector.
    #[default]
    Direct,
    /// Real and imaginary parts from the ancilla circuits with a `j_ref` reference.
    Ancilla,
}

/// `x` rounded to `eps` decimal places.
pub fn round_to(x: f64, eps: u32) -> f64 {
    let s = 10f64.powi(eps as i32);
    (x * s).round() / s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub j: u64,
    pub amp: f64,
    pub re: f64,
    pub im: f64,
    /// Statevector value of the component, kept for diagnostics.
    pub exact_re: f64,
    pub exact_im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentTable {
    /// Sorted by `amp` descending, then `j` ascending.
    pub entries: Vec<ComponentEntry>,
    pub epsilon: u32,
    pub eta_cap: usize,
    pub chi: u64,
    pub mode: ReadoutMode,
    /// Components whose `(re, im)` disagreed with `amp` beyond `10^(1-eps)`.
    pub inconsistent: usize,
    /// Reference string used by the ancilla circuits and its statevector amplitude.
    pub j_ref: Option<u64>,
    pub j_ref_amp: f64,
}

impl ComponentTable {
    pub fn eta(&self) -> usize {
        self.entries.len()
    }

    /// `Re <0|U^† Q U|0>`, zero when `j = 0` was not retained.
    pub fn c0(&self) -> f64 {
        self.entries.iter().find(|e| e.j == 0).map_or(0.0, |e| e.re)
    }

    /// Entries that become rotation layers, in selection order.
    pub fn gate_components(&self) -> impl Iterator<Item = &ComponentEntry> {
        self.entries.iter().filter(|e| e.j != 0)
    }
}

/// Measurement settings shared by every term step.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    pub mode: ReadoutMode,
    pub phase_method: PhaseMethod,
    pub epsilon: u32,
    pub chi: u64,
    pub eta_cap: usize,
}

impl Estimator {
    pub fn gamma(&self) -> f64 {
        10f64.powi(-(self.epsilon as i32))
    }
}

/// `U^† Q U |0>`.
pub fn propagated_state(u: &Circuit, q: &PauliString) -> Result<StateVector> {
    let mut s = u.state()?;
    s.apply_pauli(q)?;
    apply_circuit(&mut s, u, true)?;
    Ok(s)
}

/// `j -> |c_j|` estimates for a known `U^† Q U |0>`.
pub fn amplitudes_from_state(phi: &StateVector, chi: u64, eps: u32, mode: ReadoutMode, rng: &mut Rng) -> Result<BTreeMap<u64, f64>> {
    if eps == 0 {
        return Err(Error::InvalidArgument("epsilon must be at least 1".into()));
    }
    let rounded = |j: u64| round_to(phi.amp(j).norm(), eps);
    let mut out = BTreeMap::new();
    match mode {
        ReadoutMode::ExactReadout => {
            for j in 0..phi.amps().len() as u64 {
                let a = rounded(j);
                if a > 0.0 {
                    out.insert(j, a);
                }
            }
        }
        ReadoutMode::SampledSupport => {
            for j in phi.sample(chi, rng)?.into_keys() {
                let a = rounded(j);
                if a > 0.0 {
                    out.insert(j, a);
                }
            }
        }
        ReadoutMode::Shot => {
            for (j, count) in phi.sample(chi, rng)? {
                out.insert(j, (count as f64 / chi as f64).sqrt());
            }
        }
    }
    Ok(out)
}

pub fn estimate_amplitudes(u: &Circuit, q: &PauliString, chi: u64, eps: u32, mode: ReadoutMode, rng: &mut Rng) -> Result<BTreeMap<u64, f64>> {
    amplitudes_from_state(&propagated_state(u, q)?, chi, eps, mode, rng)
}

fn dominant_order(amps: &BTreeMap<u64, f64>) -> Vec<(u64, f64)> {
    let mut v: Vec<(u64, f64)> = amps.iter().map(|(&j, &a)| (j, a)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Up to `cap` largest components, ties by ascending `j`, with `j = 0` removed.
pub fn select_dominant(amps: &BTreeMap<u64, f64>, cap: usize) -> Vec<u64> {
    dominant_order(amps).into_iter().map(|(j, _)| j).filter(|&j| j != 0).take(cap).collect()
}

/// Smallest nonzero bitstring outside `observed`.
pub fn choose_j_ref(observed: &BTreeSet<u64>, n: usize) -> Result<u64> {
    (1..1u64 << n)
        .find(|j| !observed.contains(j))
        .ok_or_else(|| Error::InvalidArgument("observed components saturate the register; no free reference".into()))
}

/// `(pi/4, P)` with `P` flipping the bits where `t` and `s` differ, so `P|t> = |s>`.
pub fn t_gate(n: usize, t: u64, s: u64) -> Result<(f64, PauliString)> {
    if t == s {
        return Err(Error::InvalidArgument("T gate needs two distinct bitstrings".into()));
    }
    Ok((FRAC_PI_4, PauliString::from_masks(n, t ^ s, 0)?))
}

/// `amp_1 - amp_2` of a sorted table, 1 when empty.
pub fn delta_star(table: &ComponentTable) -> f64 {
    match table.entries.as_slice() {
        [] => 1.0,
        [a] => a.amp,
        [a, b, ..] => a.amp - b.amp,
    }
}

const X_GATE: Gate1 = [[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]];

/// The ancilla phase circuit up to (and including) the controlled reference
/// preparation. The ancilla is the most significant of `n + 1` qubits and
/// leaves this stage in `sin(g)|0>|j_ref> + cos(g)|1> U^† Q U|0>`.
#[derive(Clone, Debug)]
pub struct PhaseCircuit {
    n: usize,
    gamma: f64,
    j_ref: u64,
    prefix: StateVector,
}

impl PhaseCircuit {
    pub fn new(u: &Circuit, q: &PauliString, j_ref: u64, gamma: f64) -> Result<Self> {
        let n = u.n;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if j_ref == 0 || j_ref >= 1u64 << n {
            return Err(Error::InvalidArgument(format!("invalid reference bitstring {j_ref}")));
        }
        let anc = 1u64 << n;
        let mut s = StateVector::zero(n + 1)?;
        let (sg, cg) = gamma.sin_cos();
        let r_gamma: Gate1 = [[C64::new(cg, 0.0), C64::new(-sg, 0.0)], [C64::new(sg, 0.0), C64::new(cg, 0.0)]];
        s.apply_1q_at_bit(n, &r_gamma);
        s.apply_1q_at_bit(n, &X_GATE);
        apply_circuit_embedded(&mut s, u, false)?;
        s.apply_controlled_pauli(anc, anc, &q.widen(1)?)?;
        apply_circuit_embedded(&mut s, u, true)?;
        s.apply_controlled_pauli(anc, 0, &PauliString::from_masks(n + 1, j_ref, 0)?)?;
        Ok(PhaseCircuit { n, gamma, j_ref, prefix: s })
    }

    pub fn j_ref(&self) -> u64 {
        self.j_ref
    }

    /// Final state of the real-part (`real = true`) or imaginary-part circuit for component `j`.
    pub fn final_state(&self, j: u64, real: bool) -> Result<StateVector> {
        let (angle, t) = t_gate(self.n, self.j_ref, j)?;
        let mut s = self.prefix.clone();
        if real {
            s.apply_1q_at_bit(self.n, &S_GATE);
        }
        s.apply_1q_at_bit(self.n, &HADAMARD);
        s.apply_rotation(&t.widen(1)?, angle)?;
        Ok(s)
    }

    /// Probability of `(ancilla = 0, register = j_ref)`, exactly or from `chi` shots.
    pub fn probability(&self, j: u64, real: bool, shots: Option<(u64, &mut Rng)>) -> Result<f64> {
        let s = self.final_state(j, real)?;
        match shots {
            None => Ok(s.amp(self.j_ref).norm_sqr()),
            Some((chi, rng)) => {
                let counts = s.sample(chi, rng)?;
                Ok(counts.get(&self.j_ref).copied().unwrap_or(0) as f64 / chi as f64)
            }
        }
    }

    /// Inverts `m = |sin g + s cos g (c_{j_ref} + i c_j)|^2 / 4` with `c_{j_ref} = 0`.
    pub fn invert(&self, m: f64, amp: f64) -> f64 {
        let (sg, cg) = self.gamma.sin_cos();
        (sg * sg + cg * cg * amp * amp - 4.0 * m) / (2.0 * sg * cg)
    }

    /// `(re, im)` of `c_j` given its magnitude estimate.
    pub fn parts(&self, j: u64, amp: f64, mut shots: Option<(u64, &mut Rng)>) -> Result<(f64, f64)> {
        let m_re = self.probability(j, true, shots.as_mut().map(|(c, r)| (*c, &mut **r)))?;
        let m_im = self.probability(j, false, shots.as_mut().map(|(c, r)| (*c, &mut **r)))?;
        Ok((self.invert(m_re, amp), self.invert(m_im, amp)))
    }
}

/// Ancilla-circuit estimate of `(Re c_j, Im c_j)` for `c_j = <j|U^† Q U|0>`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_phase_parts(
    u: &Circuit,
    q: &PauliString,
    j: u64,
    j_ref: u64,
    gamma: f64,
    eps: u32,
    amp: f64,
    shots: Option<(u64, &mut Rng)>,
) -> Result<(f64, f64)> {
    let pc = PhaseCircuit::new(u, q, j_ref, gamma)?;
    let (re, im) = pc.parts(j, amp, shots)?;
    Ok((round_to(re, eps), round_to(im, eps)))
}

/// `theta_1 - theta_2` on the `[-pi/2, pi/2]` branch, from
/// `sin(theta_1 - theta_2) = (2m - |c_1|^2 - |c_2|^2) / (2|c_1||c_2|)` where `m` is the
/// weight of `|j_1>` after `T_{j_1 j_2}`.
pub fn relative_phase(phi: &StateVector, j1: u64, j2: u64, amp1: f64, amp2: f64, eps: u32, shots: Option<(u64, &mut Rng)>) -> Result<f64> {
    let denom = 2.0 * amp1 * amp2;
    if denom < 10f64.powi(-(eps as i32)) {
        return Err(Error::InvalidArgument("component amplitudes too small for a relative phase".into()));
    }
    let (angle, t) = t_gate(phi.n(), j1, j2)?;
    let mut s = phi.clone();
    s.apply_rotation(&t, angle)?;
    let m = match shots {
        None => s.amp(j1).norm_sqr(),
        Some((chi, rng)) => s.sample(chi, rng)?.get(&j1).copied().unwrap_or(0) as f64 / chi as f64,
    };
    Ok(((2.0 * m - amp1 * amp1 - amp2 * amp2) / denom).clamp(-1.0, 1.0).asin())
}

/// Builds the component table of one term step.
pub fn build_component_table(u: &Circuit, q: &PauliString, est: &Estimator, rng: &mut Rng) -> Result<ComponentTable> {
    let phi = propagated_state(u, q)?;
    build_table_from_state(u, q, &phi, est, rng)
}

pub fn build_table_from_state(u: &Circuit, q: &PauliString, phi: &StateVector, est: &Estimator, rng: &mut Rng) -> Result<ComponentTable> {
    if est.eta_cap == 0 {
        return Err(Error::InvalidArgument("eta_cap must be at least 1".into()));
    }
    let eps = est.epsilon;
    let amps = amplitudes_from_state(phi, est.chi, eps, est.mode, rng)?;
    let kept: Vec<(u64, f64)> = dominant_order(&amps).into_iter().take(est.eta_cap).collect();
    let shot_mode = est.mode == ReadoutMode::Shot;

    let mut entries = Vec::with_capacity(kept.len());
    let mut j_ref = None;
    let mut j_ref_amp = 0.0;
    match est.phase_method {
        PhaseMethod::Direct => {
            for &(j, amp) in &kept {
                let c = phi.amp(j);
                let (re, im) = if shot_mode {
                    let th = c.arg();
                    (amp * th.cos(), amp * th.sin())
                } else {
                    (round_to(c.re, eps), round_to(c.im, eps))
                };
                entries.push(ComponentEntry { j, amp, re, im, exact_re: c.re, exact_im: c.im });
            }
        }
        PhaseMethod::Ancilla => {
            let reference = if shot_mode {
                choose_j_ref(&amps.keys().copied().collect(), u.n)?
            } else {
                // anything above the inversion's noise floor counts as present
                let floor = 10f64.powi(-(2 * eps as i32 + 1));
                let present: BTreeSet<u64> = (0..phi.amps().len() as u64).filter(|&j| phi.amp(j).norm() >= floor).collect();
                match choose_j_ref(&present, u.n) {
                    Ok(r) => r,
                    Err(_) => {
                        let selected: BTreeSet<u64> = kept.iter().map(|e| e.0).collect();
                        let r = (1..phi.amps().len() as u64)
                            .filter(|j| !selected.contains(j))
                            .min_by(|&a, &b| phi.amp(a).norm().total_cmp(&phi.amp(b).norm()).then(a.cmp(&b)))
                            .ok_or_else(|| Error::InvalidArgument("no free reference bitstring".into()))?;
                        warn!("no zero-amplitude reference; using j_ref = {r} with |c| = {:.3e}", phi.amp(r).norm());
                        r
                    }
                }
            };
            j_ref = Some(reference);
            j_ref_amp = phi.amp(reference).norm();
            let pc = PhaseCircuit::new(u, q, reference, est.gamma())?;
            let budget_ok = shot_mode && est.chi as f64 >= 10f64.powi(2 * eps as i32 + 2);
            if shot_mode && !budget_ok {
                warn!("shot budget {} too small for ancilla phase circuits at eps = {eps}; reading m exactly", est.chi);
            }
            for &(j, amp) in &kept {
                let c = phi.amp(j);
                let (re, im) = if j == reference {
                    (0.0, 0.0)
                } else if budget_ok {
                    pc.parts(j, amp, Some((est.chi, &mut *rng)))?
                } else if shot_mode {
                    pc.parts(j, amp, None)?
                } else {
                    pc.parts(j, c.norm(), None)?
                };
                let (re, im) = if shot_mode { (re, im) } else { (round_to(re, eps), round_to(im, eps)) };
                entries.push(ComponentEntry { j, amp, re, im, exact_re: c.re, exact_im: c.im });
            }
        }
    }

    let tol = 10f64.powi(1 - eps as i32);
    let mut inconsistent = 0;
    if !shot_mode {
        for e in &entries {
            if ((e.re * e.re + e.im * e.im).sqrt() - e.amp).abs() > tol {
                inconsistent += 1;
                warn!("component {} inconsistent: |re + i im| = {:.4}, amp = {:.4}", e.j, e.re.hypot(e.im), e.amp);
            }
        }
    }
    Ok(ComponentTable { entries, epsilon: eps, eta_cap: est.eta_cap, chi: est.chi, mode: est.mode, inconsistent, j_ref, j_ref_amp })
}
