//! Exact trotterized imaginary-time evolution and exact diagonalization.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Hamiltonian, PauliString};
use crate::simulator::{Prep, StateVector};

/// Largest register `exact_ground` will diagonalize.
pub const MAX_ED_QUBITS: usize = 12;

const ANNIHILATION_NORM: f64 = 1e-12;

/// `psi <- (cosh(dk) psi - sinh(dk) Q psi) / norm`.
pub fn apply_imaginary_term(state: &mut StateVector, q: &PauliString, dk: f64) -> Result<()> {
    if !dk.is_finite() {
        return Err(Error::InvalidArgument(format!("imaginary-time step {dk} is not finite")));
    }
    let mut qpsi = state.clone();
    qpsi.apply_pauli(q)?;
    let (ch, sh) = (dk.cosh(), dk.sinh());
    for (a, b) in state.amps_mut().iter_mut().zip(qpsi.amps()) {
        *a = *a * ch - b * sh;
    }
    let norm = state.normalize();
    if !(norm >= ANNIHILATION_NORM) || !norm.is_finite() {
        return Err(Error::Annihilated { norm });
    }
    Ok(())
}

/// Number of sweeps for total time `t` at step `delta`.
pub fn sweep_count(delta: f64, t: f64) -> Result<usize> {
    if !(delta > 0.0) || !(t >= 0.0) || !delta.is_finite() || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("need delta > 0 and T >= 0, got delta={delta}, T={t}")));
    }
    Ok((t / delta + 1e-9).floor() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ITEStep {
    pub sweep: usize,
    /// Cumulative single-term updates.
    pub term_steps: usize,
    pub tau: f64,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct ITETrajectory {
    pub delta: f64,
    pub steps: Vec<ITEStep>,
    /// State after each sweep, aligned with `steps` (index 0 is the initial state).
    pub states: Vec<StateVector>,
}

impl ITETrajectory {
    pub fn final_energy(&self) -> f64 {
        self.steps.last().map(|s| s.energy).unwrap_or(f64::NAN)
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

/// Trotterized evolution: each sweep applies every term once with `dk = delta * w_k`
/// (or the symmetric half-step product when `second_order`), and advances `tau` by `delta`.
pub fn run_ite(h: &Hamiltonian, delta: f64, t: f64, prep: &Prep, second_order: bool) -> Result<ITETrajectory> {
    let sweeps = sweep_count(delta, t)?;
    let mut state = StateVector::init(h.n(), prep)?;
    let mut steps = vec![ITEStep { sweep: 0, term_steps: 0, tau: 0.0, energy: state.expectation(h)? }];
    let mut states = vec![state.clone()];
    let mut term_steps = 0;
    for sweep in 1..=sweeps {
        if second_order {
            for term in h.terms().iter().chain(h.terms().iter().rev()) {
                apply_imaginary_term(&mut state, &term.pauli, 0.5 * delta * term.weight)?;
                term_steps += 1;
            }
        } else {
            for term in h.terms() {
                apply_imaginary_term(&mut state, &term.pauli, delta * term.weight)?;
                term_steps += 1;
            }
        }
        let energy = state.expectation(h)?;
        if !energy.is_finite() {
            return Err(Error::Numerical(format!("non-finite energy at sweep {sweep}")));
        }
        steps.push(ITEStep { sweep, term_steps, tau: sweep as f64 * delta, energy });
        states.push(state.clone());
    }
    Ok(ITETrajectory { delta, steps, states })
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Distance to the next distinct level in the same sector (`inf` for a one-level sector).
    pub gap: f64,
    pub vector: StateVector,
    /// Orthonormal basis of the lowest level; `vector` is its first element.
    pub manifold: Vec<StateVector>,
    pub sector_dim: usize,
}

impl GroundState {
    /// `sum_i |<v_i|psi>|^2` over the ground manifold.
    pub fn projector_fidelity(&self, psi: &StateVector) -> Result<f64> {
        self.manifold.iter().map(|v| v.fidelity(psi)).sum()
    }
}

fn sector_matrix(h: &Hamiltonian, basis: &[u64]) -> DMatrix<C64> {
    let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let d = basis.len();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for (col, &b) in basis.iter().enumerate() {
        m[(col, col)] += h.constant();
        for t in h.terms() {
            let (j, coef) = t.pauli.apply_to_basis(b);
            if let Some(&row) = index.get(&j) {
                m[(row, col)] += coef * t.weight;
            }
        }
    }
    m
}

/// Lowest eigenpair of `h`, optionally restricted to the basis states accepted by `sector`.
pub fn exact_ground(h: &Hamiltonian, sector: Option<&dyn Fn(u64) -> bool>) -> Result<GroundState> {
    let n = h.n();
    if n == 0 || n > MAX_ED_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let basis: Vec<u64> = (0..1u64 << n).filter(|&b| sector.is_none_or(|f| f(b))).collect();
    if basis.is_empty() {
        return Err(Error::InvalidArgument("sector filter rejects every basis state".into()));
    }
    let m = sector_matrix(h, &basis);
    let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if m.iter().all(|c| c.im.abs() <= 1e-14 * scale) {
        let eig = SymmetricEigen::new(m.map(|c| c.re));
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let e0 = values[order[0]];
    let tol = 1e-8 * scale;
    let degenerate: Vec<usize> = order.iter().copied().take_while(|&i| values[i] - e0 <= tol).collect();
    let gap = order.iter().map(|&i| values[i]).find(|&v| v - e0 > tol).map_or(f64::INFINITY, |v| v - e0);

    let embed = |col: usize| -> Result<StateVector> {
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        for (r, &b) in basis.iter().enumerate() {
            amps[b as usize] = vectors[(r, col)];
        }
        let mut s = StateVector::from_amplitudes(n, amps)?;
        s.normalize();
        Ok(s)
    };
    let manifold = degenerate.iter().map(|&c| embed(c)).collect::<Result<Vec<_>>>()?;
    Ok(GroundState { energy: e0, gap, vector: manifold[0].clone(), manifold, sector_dim: basis.len() })
}

/// Basis states connected to `start` through nonzero matrix elements of `h`.
pub fn reachable_sector(h: &Hamiltonian, start: u64) -> BTreeSet<u64> {
    // amplitudes of terms that map onto the same target may cancel; collect net elements first
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(b) = queue.pop_front() {
        let mut out: HashMap<u64, C64> = HashMap::new();
        for t in h.terms() {
            let (j, coef) = t.pauli.apply_to_basis(b);
            *out.entry(j).or_default() += coef * t.weight;
        }
        for (j, amp) in out {
            if amp.norm() > 1e-12 && seen.insert(j) {
                queue.push_back(j);
            }
        }
    }
    seen
}
