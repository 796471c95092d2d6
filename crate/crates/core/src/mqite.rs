//! The MQITE driver: per-term measurement, rotation angles, circuit growth and
//! per-sweep statistics.

use std::io::Write;
use std::path::Path;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose_rotation, fuse_single_qubit, gate_count, GateList};
use crate::error::{Error, Result};
use crate::ite::{run_ite, sweep_count, GroundState, ITEStep};
use crate::measurement::{build_component_table, delta_star, ComponentEntry, Estimator, PhaseMethod, ReadoutMode};
use crate::pauli::{Hamiltonian, PauliString};
use crate::simulator::{seeded_rng, Circuit, Layer, Prep, Rng, StateVector};

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MQITEConfig {
    /// Imaginary-time increment per sweep.
    pub delta: f64,
    /// Total imaginary time; the run performs `T / delta` sweeps.
    #[serde(rename = "T")]
    pub total_time: f64,
    pub epsilon: u32,
    pub eta_cap: usize,
    pub chi: u64,
    #[serde(default)]
    pub mode: ReadoutMode,
    #[serde(default)]
    pub phase_method: PhaseMethod,
    /// Initial-state preparation; the problem's default when absent.
    #[serde(default)]
    pub prep: Option<Prep>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub qse_enabled: bool,
    /// Symmetric sweeps for the ITE comparison run.
    #[serde(default)]
    pub second_order_trotter: bool,
    /// Divide angles by `n_k = sqrt(1 - 2 dk c0 + dk^2)`; `false` uses the bare first-order angles.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

impl Default for MQITEConfig {
    fn default() -> Self {
        MQITEConfig {
            delta: 0.1,
            total_time: 3.0,
            epsilon: 2,
            eta_cap: 100,
            chi: 1000,
            mode: ReadoutMode::ExactReadout,
            phase_method: PhaseMethod::Direct,
            prep: None,
            seed: 0,
            qse_enabled: false,
            second_order_trotter: false,
            normalize: true,
        }
    }
}

impl MQITEConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        sweep_count(self.delta, self.total_time)?;
        if self.eta_cap == 0 {
            return Err(Error::InvalidArgument("eta_cap must be at least 1".into()));
        }
        if self.epsilon == 0 || self.epsilon > 15 {
            return Err(Error::InvalidArgument(format!("epsilon must lie in 1..=15, got {}", self.epsilon)));
        }
        if self.chi == 0 {
            return Err(Error::InvalidArgument("chi must be at least 1".into()));
        }
        Ok(())
    }

    pub fn estimator(&self) -> Estimator {
        Estimator { mode: self.mode, phase_method: self.phase_method, epsilon: self.epsilon, chi: self.chi, eta_cap: self.eta_cap }
    }

    pub fn sweeps(&self) -> usize {
        sweep_count(self.delta, self.total_time).unwrap_or(0)
    }
}

/// Statistics for one single-term update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermStep {
    pub sweep: usize,
    pub term: usize,
    pub dk: f64,
    pub c0: f64,
    pub nk: f64,
    pub eta: usize,
    pub delta_star: f64,
    pub gates_1q: usize,
    pub gates_2q: usize,
    pub inconsistent: usize,
    pub j_ref: Option<u64>,
    pub components: Vec<ComponentEntry>,
    /// The block prepended to the circuit, in application order.
    pub layers: Vec<Layer>,
}

impl TermStep {
    pub fn gates(&self) -> usize {
        self.gates_1q + self.gates_2q
    }
}

/// Angles `(y_r, y_i)` for component `c_j`.
pub fn component_angles(dk: f64, nk: f64, re: f64, im: f64) -> (f64, f64) {
    (dk * re / nk, -dk * im / nk)
}

/// `n_k`, or 1 for the bare form.
pub fn normalization(dk: f64, c0: f64, normalize: bool) -> Result<f64> {
    if !normalize {
        return Ok(1.0);
    }
    let v = 1.0 - 2.0 * dk * c0 + dk * dk;
    if !(v > 0.0) {
        return Err(Error::Numerical(format!("normalization factor vanished (dk = {dk}, c0 = {c0})")));
    }
    Ok(v.sqrt())
}

/// One term update `U <- U U_delta` for `exp(-delta w Q)`.
pub fn mqite_term_step(circuit: &mut Circuit, w: f64, q: &PauliString, cfg: &MQITEConfig, rng: &mut Rng) -> Result<TermStep> {
    let dk = cfg.delta * w;
    if dk.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("|delta * w| = {} is outside the perturbative regime", dk.abs())));
    }
    let table = build_component_table(circuit, q, &cfg.estimator(), rng)?;
    let n = circuit.n;
    let c0 = table.c0();
    let nk = normalization(dk, c0, cfg.normalize)?;

    let mut block = Vec::new();
    let mut gates = GateList::default();
    for e in table.gate_components() {
        let (yr, yi) = component_angles(dk, nk, e.re, e.im);
        for (y, p) in [(yr, PauliString::p_real_for(n, e.j)?), (yi, PauliString::p_imag_for(n, e.j)?)] {
            if y != 0.0 {
                gates.gates.extend(decompose_rotation(&p, y)?.gates);
                block.push(Layer { angle: y, pauli: p });
            }
        }
    }
    // adjacent single-qubit gates merge, as a transpiler would
    let (g1, g2) = gate_count(&fuse_single_qubit(&gates));
    circuit.layers.splice(0..0, block.iter().copied());

    if cfg.mode != ReadoutMode::ExactReadout {
        let need = table.eta() as f64 * 10f64.powi(2 * cfg.epsilon as i32);
        if (cfg.chi as f64) < need {
            debug!("chi = {} below eta * 10^(2 eps) = {need}", cfg.chi);
        }
    }
    Ok(TermStep {
        sweep: 0,
        term: 0,
        dk,
        c0,
        nk,
        eta: table.eta(),
        delta_star: delta_star(&table),
        gates_1q: g1,
        gates_2q: g2,
        inconsistent: table.inconsistent,
        j_ref: table.j_ref,
        components: table.entries,
        layers: block,
    })
}

/// `f(y) = sum_j |sum_{P -> j} i y_P a_P + dk c_j / n_k|^2`, with `P|0> = a_P |j_P>`.
/// Stationary at the angles `mqite_term_step` computes; `c_j` are the
/// statevector values of the step's components.
pub fn cost_function(layers: &[Layer], components: &[ComponentEntry], dk: f64, nk: f64) -> f64 {
    use num_complex::Complex64 as C64;
    use std::collections::BTreeMap;
    let mut r: BTreeMap<u64, C64> = BTreeMap::new();
    for e in components.iter().filter(|e| e.j != 0) {
        *r.entry(e.j).or_default() += C64::new(e.exact_re, e.exact_im) * (dk / nk);
    }
    for l in layers {
        let (j, a) = l.pauli.apply_to_basis(0);
        *r.entry(j).or_default() += C64::new(0.0, l.angle) * a;
    }
    r.values().map(|v| v.norm_sqr()).sum()
}

/// Largest central-difference component of `grad f` at the step's angles.
pub fn cost_function_check(step: &TermStep, h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut layers = step.layers.clone();
    for i in 0..layers.len() {
        let y = layers[i].angle;
        layers[i].angle = y + h;
        let fp = cost_function(&layers, &step.components, step.dk, step.nk);
        layers[i].angle = y - h;
        let fm = cost_function(&layers, &step.components, step.dk, step.nk);
        layers[i].angle = y;
        worst = worst.max(((fp - fm) / (2.0 * h)).abs());
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub term_steps: usize,
    pub tau: f64,
    pub energy: f64,
    pub rel_error: Option<f64>,
    /// `|<psi_MQITE|psi_ITE>|^2` at the same sweep.
    pub fidelity: f64,
    /// Projector overlap with the exact ground manifold.
    pub ground_fidelity: Option<f64>,
    pub ite_energy: f64,
    /// Largest component count over the sweep's term steps.
    pub eta: usize,
    /// For the last term of the sweep.
    pub delta_star: f64,
    pub gates_1q: usize,
    pub gates_2q: usize,
    /// `<H^2> - <H>^2`.
    pub variance: f64,
    /// Circuit length after the sweep; the circuit at this sweep is the final
    /// circuit's last `layers` layers.
    pub layers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: MQITEConfig,
    pub n: usize,
    pub n_terms: usize,
    pub exact_energy: Option<f64>,
    pub sweeps: Vec<SweepRecord>,
    pub term_steps: Vec<TermStep>,
    pub ite: Vec<ITEStep>,
    pub final_circuit: Circuit,
}

impl RunRecord {
    pub fn final_sweep(&self) -> &SweepRecord {
        self.sweeps.last().expect("record always holds the initial sweep")
    }

    pub fn eta_max(&self) -> usize {
        self.sweeps.iter().map(|s| s.eta).max().unwrap_or(0)
    }

    /// Circuit as it stood after `sweep`.
    pub fn circuit_at(&self, sweep: usize) -> Result<Circuit> {
        let s = self
            .sweeps
            .get(sweep)
            .ok_or_else(|| Error::InvalidArgument(format!("sweep {sweep} not recorded")))?;
        Ok(self.final_circuit.suffix(s.layers))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            tau: f64,
            energy: f64,
            rel_error: Option<f64>,
            fidelity: f64,
            eta: usize,
            delta_star: f64,
            gates_1q: usize,
            gates_2q: usize,
        }
        let mut w = csv::Writer::from_writer(out);
        for s in &self.sweeps {
            w.serialize(Row {
                tau: s.tau,
                energy: s.energy,
                rel_error: s.rel_error,
                fidelity: s.fidelity,
                eta: s.eta,
                delta_star: s.delta_star,
                gates_1q: s.gates_1q,
                gates_2q: s.gates_2q,
            })
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ite_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            tau: f64,
            energy: f64,
            rel_error: Option<f64>,
            fidelity: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (i, s) in self.ite.iter().zip(&self.sweeps) {
            w.serialize(Row {
                tau: i.tau,
                energy: i.energy,
                rel_error: self.exact_energy.map(|e0| (i.energy - e0) / e0.abs()),
                fidelity: s.fidelity,
            })
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-term-step gate totals next to the `4 eta n` bound.
    pub fn write_gates_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            sweep: usize,
            term: usize,
            eta: usize,
            gates_1q: usize,
            gates_2q: usize,
            gates: usize,
            bound: usize,
        }
        let mut w = csv::Writer::from_writer(out);
        for t in &self.term_steps {
            w.serialize(Row {
                sweep: t.sweep,
                term: t.term,
                eta: t.eta,
                gates_1q: t.gates_1q,
                gates_2q: t.gates_2q,
                gates: t.gates(),
                bound: 4 * t.eta * self.n,
            })
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_trajectory_csv(std::fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn variance(state: &StateVector, h: &Hamiltonian, energy: f64) -> Result<f64> {
    Ok((state.apply_hamiltonian(h)?.norm_sqr() - energy * energy).max(0.0))
}

/// Full run: `T / delta` sweeps over the terms in stored order, with an ITE
/// run at identical settings for the fidelity column.
pub fn run_mqite(h: &Hamiltonian, cfg: &MQITEConfig, exact: Option<&GroundState>) -> Result<RunRecord> {
    cfg.validate()?;
    if h.is_empty() {
        return Err(Error::InvalidArgument("Hamiltonian has no terms".into()));
    }
    let prep = cfg.prep.clone().unwrap_or_default();
    prep.validate(h.n())?;
    let sweeps = cfg.sweeps();
    let ite = run_ite(h, cfg.delta, cfg.total_time, &prep, cfg.second_order_trotter)?;
    let mut rng = seeded_rng(cfg.seed, 0);
    let mut circuit = Circuit::new(h.n(), prep);
    let mut term_steps: Vec<TermStep> = Vec::with_capacity(sweeps * h.len());

    let observe = |circuit: &Circuit, sweep: usize, steps: &[TermStep]| -> Result<SweepRecord> {
        let state = circuit.state()?;
        let energy = state.expectation(h)?;
        if !energy.is_finite() {
            return Err(Error::Numerical(format!("non-finite energy after sweep {sweep}")));
        }
        let last = steps.last();
        Ok(SweepRecord {
            sweep,
            term_steps: sweep * h.len(),
            tau: sweep as f64 * cfg.delta,
            energy,
            rel_error: exact.map(|g| (energy - g.energy) / g.energy.abs()),
            fidelity: state.fidelity(&ite.states[sweep])?,
            ground_fidelity: exact.map(|g| g.projector_fidelity(&state)).transpose()?,
            ite_energy: ite.steps[sweep].energy,
            eta: steps.iter().map(|t| t.eta).max().unwrap_or(0),
            delta_star: last.map_or(1.0, |t| t.delta_star),
            gates_1q: steps.iter().map(|t| t.gates_1q).sum(),
            gates_2q: steps.iter().map(|t| t.gates_2q).sum(),
            variance: variance(&state, h, energy)?,
            layers: circuit.layers.len(),
        })
    };

    let mut records = vec![observe(&circuit, 0, &[])?];
    let mut warned = false;
    for sweep in 1..=sweeps {
        let start = term_steps.len();
        for (k, term) in h.terms().iter().enumerate() {
            let mut step = mqite_term_step(&mut circuit, term.weight, &term.pauli, cfg, &mut rng)
                .map_err(|e| Error::Numerical(format!("sweep {sweep}, term {k}: {e}")))?;
            step.sweep = sweep;
            step.term = k;
            if !warned && cfg.mode != ReadoutMode::ExactReadout && (cfg.chi as f64) < step.eta as f64 * 10f64.powi(2 * cfg.epsilon as i32) {
                warn!("chi = {} is below eta * 10^(2 eps) for eta = {}; amplitudes carry fewer than {} digits", cfg.chi, step.eta, cfg.epsilon);
                warned = true;
            }
            term_steps.push(step);
        }
        let rec = observe(&circuit, sweep, &term_steps[start..])?;
        debug!("sweep {sweep}: E = {:.6}, eta = {}, layers = {}", rec.energy, rec.eta, rec.layers);
        records.push(rec);
    }
    Ok(RunRecord {
        config: cfg.clone(),
        n: h.n(),
        n_terms: h.len(),
        exact_energy: exact.map(|g| g.energy),
        sweeps: records,
        term_steps,
        ite: ite.steps,
        final_circuit: circuit,
    })
}
