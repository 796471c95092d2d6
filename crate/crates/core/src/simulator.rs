//! Dense statevector engine.
//!
//! Pauli rotations are applied by pairing amplitude `j` with `j ^ x_mask`, so a
//! layer costs one pass over `2^n` amplitudes and no matrix is ever built.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{i_pow, Hamiltonian, PauliString};

/// Dense-memory guard.
pub const MAX_SIM_QUBITS: usize = 24;

/// Seeded generator used throughout; `stream` separates independent consumers
/// drawing from the same seed.
pub type Rng = ChaCha20Rng;

pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub type Gate1 = [[C64; 2]; 2];

pub const HADAMARD: Gate1 = [
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)],
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)],
];

pub const S_GATE: Gate1 = [[ONE, ZERO], [ZERO, C64::new(0.0, 1.0)]];

/// Initial-state preparation `U_m`, with `|0̃> = U_m |0...0>`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Prep {
    /// `|0...0>`.
    #[default]
    Zero,
    /// Computational basis state with the listed qubits set to 1.
    Basis { qubits: Vec<usize> },
    /// `(|0...0> + |1...1>)/sqrt(2)`.
    GhzPlus,
    /// `(|0...0> - |1...1>)/sqrt(2)`.
    GhzMinus,
}

impl Prep {
    pub fn is_identity(&self) -> bool {
        matches!(self, Prep::Zero) || matches!(self, Prep::Basis { qubits } if qubits.is_empty())
    }

    fn basis_mask(qubits: &[usize], n: usize) -> Result<u64> {
        qubits.iter().try_fold(0u64, |m, &q| {
            if q >= n {
                Err(Error::InvalidArgument(format!("qubit {q} out of range for n = {n}")))
            } else {
                Ok(m | 1u64 << (n - 1 - q))
            }
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Prep::Basis { qubits } = self {
            Prep::basis_mask(qubits, n)?;
        }
        Ok(())
    }
}

/// One factor `exp(i * angle * pauli)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub angle: f64,
    pub pauli: PauliString,
}

/// `U = U_m * L_{last} * ... * L_0`: on `|0...0>` the layers run first, in
/// stored order, and the preparation unitary runs last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    #[serde(default)]
    pub prep: Prep,
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn new(n: usize, prep: Prep) -> Self {
        Circuit { n, prep, layers: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Circuit::new(n, Prep::Zero)
    }

    pub fn push(&mut self, angle: f64, pauli: PauliString) -> Result<()> {
        if pauli.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: pauli.n() });
        }
        self.layers.push(Layer { angle, pauli });
        Ok(())
    }

    /// `U |0...0>`.
    pub fn state(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n)?;
        apply_circuit(&mut s, self, false)?;
        Ok(s)
    }

    /// The circuit consisting of the last `count` layers, which is the
    /// circuit as it stood `count` layers ago when growth prepends layers.
    pub fn suffix(&self, count: usize) -> Circuit {
        let start = self.layers.len().saturating_sub(count);
        Circuit { n: self.n, prep: self.prep.clone(), layers: self.layers[start..].to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SIM_QUBITS {
        Err(Error::QubitCount(n))
    } else {
        Ok(())
    }
}

#[inline]
fn parity_sign(v: u64) -> f64 {
    if v.count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        check_n(n)?;
        let mut amps = vec![ZERO; 1usize << n];
        amps[0] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Normalized state for a preparation tag.
    pub fn init(n: usize, prep: &Prep) -> Result<Self> {
        let mut s = StateVector::zero(n)?;
        s.apply_prep(prep, n, false)?;
        Ok(s)
    }

    pub fn basis(n: usize, j: u64) -> Result<Self> {
        check_n(n)?;
        if j >= 1u64 << n {
            return Err(Error::InvalidArgument(format!("basis index {j} out of range")));
        }
        let mut amps = vec![ZERO; 1usize << n];
        amps[j as usize] = ONE;
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_n(n)?;
        if amps.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amps.len()
            )));
        }
        Ok(StateVector { n, amps })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    #[inline]
    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    #[inline]
    pub fn amp(&self, j: u64) -> C64 {
        self.amps[j as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        norm
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: p.n() });
        }
        Ok(())
    }

    /// `psi <- P psi`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_pauli(p)?;
        let x = p.x_mask() as usize;
        let z = p.z_mask();
        let base = i_pow(p.base_phase());
        if x == 0 {
            for (j, a) in self.amps.iter_mut().enumerate() {
                *a *= base * parity_sign(j as u64 & z);
            }
            return Ok(());
        }
        let hb = 1usize << (63 - (x as u64).leading_zeros());
        let dim = self.amps.len();
        for block in (0..dim).step_by(2 * hb) {
            for j in block..block + hb {
                let k = j ^ x;
                let a = self.amps[j];
                let b = self.amps[k];
                self.amps[k] = base * parity_sign(j as u64 & z) * a;
                self.amps[j] = base * parity_sign(k as u64 & z) * b;
            }
        }
        Ok(())
    }

    /// `psi <- exp(i y P) psi = cos(y) psi + i sin(y) P psi`.
    pub fn apply_rotation(&mut self, p: &PauliString, y: f64) -> Result<()> {
        self.check_pauli(p)?;
        if y == 0.0 {
            return Ok(());
        }
        let (s, c) = y.sin_cos();
        let x = p.x_mask() as usize;
        let z = p.z_mask();
        let isb = C64::new(0.0, s) * i_pow(p.base_phase());
        if x == 0 {
            let plus = c + isb;
            let minus = c - isb;
            for (j, a) in self.amps.iter_mut().enumerate() {
                *a *= if (j as u64 & z).count_ones() & 1 == 0 { plus } else { minus };
            }
            return Ok(());
        }
        let hb = 1usize << (63 - (x as u64).leading_zeros());
        let dim = self.amps.len();
        for block in (0..dim).step_by(2 * hb) {
            for j in block..block + hb {
                let k = j ^ x;
                let a = self.amps[j];
                let b = self.amps[k];
                self.amps[j] = a * c + isb * parity_sign(k as u64 & z) * b;
                self.amps[k] = b * c + isb * parity_sign(j as u64 & z) * a;
            }
        }
        Ok(())
    }

    /// Applies `P` on the amplitudes whose bits under `ctrl_mask` equal `ctrl_value`.
    /// `P` must not flip any control bit.
    pub fn apply_controlled_pauli(&mut self, ctrl_mask: u64, ctrl_value: u64, p: &PauliString) -> Result<()> {
        self.check_pauli(p)?;
        if p.x_mask() & ctrl_mask != 0 {
            return Err(Error::InvalidArgument("controlled Pauli flips its control".into()));
        }
        let x = p.x_mask() as usize;
        let z = p.z_mask();
        let base = i_pow(p.base_phase());
        let dim = self.amps.len();
        for j in 0..dim {
            if (j as u64) & ctrl_mask != ctrl_value {
                continue;
            }
            let k = j ^ x;
            if k < j {
                continue;
            }
            if k == j {
                self.amps[j] *= base * parity_sign(j as u64 & z);
            } else {
                let a = self.amps[j];
                let b = self.amps[k];
                self.amps[k] = base * parity_sign(j as u64 & z) * a;
                self.amps[j] = base * parity_sign(k as u64 & z) * b;
            }
        }
        Ok(())
    }

    /// Single-qubit gate on the qubit stored at bit position `bit`.
    pub fn apply_1q_at_bit(&mut self, bit: usize, g: &Gate1) {
        let hb = 1usize << bit;
        let dim = self.amps.len();
        for block in (0..dim).step_by(2 * hb) {
            for j in block..block + hb {
                let a = self.amps[j];
                let b = self.amps[j | hb];
                self.amps[j] = g[0][0] * a + g[0][1] * b;
                self.amps[j | hb] = g[1][0] * a + g[1][1] * b;
            }
        }
    }

    /// CNOT between bit positions.
    pub fn apply_cnot_at_bits(&mut self, control_bit: usize, target_bit: usize) {
        let c = 1usize << control_bit;
        let t = 1usize << target_bit;
        for j in 0..self.amps.len() {
            if j & c != 0 && j & t == 0 {
                self.amps.swap(j, j | t);
            }
        }
    }

    /// Applies `U_m` (or its inverse) to the lowest `reg_n` qubits.
    pub fn apply_prep(&mut self, prep: &Prep, reg_n: usize, inverse: bool) -> Result<()> {
        if reg_n == 0 || reg_n > self.n {
            return Err(Error::QubitCount(reg_n));
        }
        match prep {
            Prep::Zero => {}
            Prep::Basis { qubits } => {
                let mask = Prep::basis_mask(qubits, reg_n)?;
                if mask != 0 {
                    let flip = PauliString::from_masks(self.n, mask, 0)?;
                    self.apply_pauli(&flip)?;
                }
            }
            Prep::GhzPlus | Prep::GhzMinus => {
                let top = reg_n - 1;
                let minus = matches!(prep, Prep::GhzMinus);
                if !inverse {
                    if minus {
                        self.apply_1q_at_bit(top, &[[ZERO, ONE], [ONE, ZERO]]);
                    }
                    self.apply_1q_at_bit(top, &HADAMARD);
                    for b in (0..top).rev() {
                        self.apply_cnot_at_bits(top, b);
                    }
                } else {
                    for b in 0..top {
                        self.apply_cnot_at_bits(top, b);
                    }
                    self.apply_1q_at_bit(top, &HADAMARD);
                    if minus {
                        self.apply_1q_at_bit(top, &[[ZERO, ONE], [ONE, ZERO]]);
                    }
                }
            }
        }
        Ok(())
    }

    /// `<psi| P |psi>`.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<C64> {
        self.check_pauli(p)?;
        let x = p.x_mask() as usize;
        let z = p.z_mask();
        let mut acc = ZERO;
        for (j, a) in self.amps.iter().enumerate() {
            acc += self.amps[j ^ x].conj() * a * parity_sign(j as u64 & z);
        }
        Ok(acc * i_pow(p.base_phase()))
    }

    /// `sum_k w_k <psi|Q_k|psi>`, imaginary part discarded.
    pub fn expectation(&self, h: &Hamiltonian) -> Result<f64> {
        if h.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: h.n() });
        }
        let mut e = h.constant() * self.norm_sqr();
        for t in h.terms() {
            e += t.weight * self.expectation_pauli(&t.pauli)?.re;
        }
        Ok(e)
    }

    /// `H |psi>` as a new (unnormalized) vector.
    pub fn apply_hamiltonian(&self, h: &Hamiltonian) -> Result<StateVector> {
        if h.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: h.n() });
        }
        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a *= h.constant());
        for t in h.terms() {
            let mut v = self.clone();
            v.apply_pauli(&t.pauli)?;
            for (o, a) in out.amps.iter_mut().zip(&v.amps) {
                *o += a * t.weight;
            }
        }
        Ok(out)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: other.n });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `chi` independent computational-basis measurements.
    pub fn sample(&self, chi: u64, rng: &mut Rng) -> Result<BTreeMap<u64, u64>> {
        if chi == 0 {
            return Err(Error::InvalidArgument("shot count must be at least 1".into()));
        }
        let dev = (self.norm_sqr() - 1.0).abs();
        if dev > 1e-6 {
            return Err(Error::NotNormalized(dev));
        }
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = BTreeMap::new();
        for _ in 0..chi {
            let u: f64 = rng.random::<f64>() * total;
            let mut j = cdf.partition_point(|&c| c <= u);
            // never land on a zero-probability tail entry
            while j > 0 && (j >= cdf.len() || self.amps[j].norm_sqr() == 0.0) {
                j -= 1;
            }
            *counts.entry(j as u64).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Little-endian dump: `n` as `u64`, then interleaved `(re, im)` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 16 * self.amps.len());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidArgument("truncated statevector dump".into());
        let n = u64::from_le_bytes(bytes.get(..8).ok_or_else(bad)?.try_into().unwrap()) as usize;
        check_n(n)?;
        let body = &bytes[8..];
        if body.len() != 16 << n {
            return Err(bad());
        }
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(StateVector { n, amps })
    }
}

/// `exp(i y P)` applied in place.
pub fn apply_pauli_rotation(state: &mut StateVector, p: &PauliString, y: f64) -> Result<()> {
    state.apply_rotation(p, y)
}

/// Applies `U` (layers then preparation) or `U^†` (inverse preparation, then
/// the layers reversed with negated angles).
pub fn apply_circuit(state: &mut StateVector, c: &Circuit, dagger: bool) -> Result<()> {
    if state.n() != c.n {
        return Err(Error::SizeMismatch { expected: state.n(), found: c.n });
    }
    if dagger {
        state.apply_prep(&c.prep, c.n, true)?;
        for l in c.layers.iter().rev() {
            state.apply_rotation(&l.pauli, -l.angle)?;
        }
    } else {
        for l in &c.layers {
            state.apply_rotation(&l.pauli, l.angle)?;
        }
        state.apply_prep(&c.prep, c.n, false)?;
    }
    Ok(())
}

/// Applies `U` (or `U^†`) to the lowest `c.n` qubits of a wider register.
pub fn apply_circuit_embedded(state: &mut StateVector, c: &Circuit, dagger: bool) -> Result<()> {
    let extra = state
        .n()
        .checked_sub(c.n)
        .ok_or(Error::SizeMismatch { expected: state.n(), found: c.n })?;
    if dagger {
        state.apply_prep(&c.prep, c.n, true)?;
        for l in c.layers.iter().rev() {
            state.apply_rotation(&l.pauli.widen(extra)?, -l.angle)?;
        }
    } else {
        for l in &c.layers {
            state.apply_rotation(&l.pauli.widen(extra)?, l.angle)?;
        }
        state.apply_prep(&c.prep, c.n, false)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_2;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn random_state(n: usize, rng: &mut Rng) -> StateVector {
        let amps = (0..1usize << n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut s = StateVector::from_amplitudes(n, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn init_examples() {
        let s = StateVector::init(3, &Prep::Zero).unwrap();
        assert_eq!(s.amp(0), ONE);
        assert_eq!(s.norm_sqr(), 1.0);

        let g = StateVector::init(2, &Prep::GhzPlus).unwrap();
        assert!((g.amp(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((g.amp(3).re - FRAC_1_SQRT_2).abs() < 1e-15);
        let gm = StateVector::init(3, &Prep::GhzMinus).unwrap();
        assert!((gm.amp(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((gm.amp(7).re + FRAC_1_SQRT_2).abs() < 1e-15);

        let b = StateVector::init(4, &Prep::Basis { qubits: vec![0, 3] }).unwrap();
        assert_eq!(b.amp(0b1001), ONE);

        assert!(matches!(StateVector::init(25, &Prep::Zero), Err(Error::QubitCount(25))));
        assert!(StateVector::init(0, &Prep::Zero).is_err());
        assert!(StateVector::init(2, &Prep::Basis { qubits: vec![2] }).is_err());
    }

    #[test]
    fn rotation_special_angles() {
        let mut rng = seeded_rng(1, 0);
        let s0 = random_state(3, &mut rng);
        let q = p("XYZ");
        let mut s = s0.clone();
        s.apply_rotation(&q, 0.0).unwrap();
        assert_eq!(s, s0);

        let mut s = s0.clone();
        s.apply_rotation(&q, FRAC_PI_2).unwrap();
        let mut expect = s0.clone();
        expect.apply_pauli(&q).unwrap();
        expect.amps_mut().iter_mut().for_each(|a| *a *= C64::new(0.0, 1.0));
        assert!(max_diff(&s, &expect) < 1e-15);
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        let mut rng = seeded_rng(2, 0);
        let letters = ['I', 'X', 'Y', 'Z'];
        for _ in 0..40 {
            let label: String = (0..5).map(|_| letters[rng.random_range(0..4)]).collect();
            let q = p(&label);
            let y = rng.random::<f64>() * 6.0 - 3.0;
            let s0 = random_state(5, &mut rng);
            let mut s = s0.clone();
            s.apply_rotation(&q, y).unwrap();
            let v = dense::rotation_matrix(&q, y) * DVector::from_column_slice(s0.amps());
            let d = s.amps().iter().zip(v.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12, "{label} {y}: {d}");
        }
    }

    #[test]
    fn rotation_composes_and_preserves_norm() {
        let mut rng = seeded_rng(3, 0);
        let q = p("YZXI");
        let s0 = random_state(4, &mut rng);
        let mut a = s0.clone();
        a.apply_rotation(&q, 0.3).unwrap();
        a.apply_rotation(&q, 0.45).unwrap();
        let mut b = s0.clone();
        b.apply_rotation(&q, 0.75).unwrap();
        assert!(max_diff(&a, &b) < 1e-10);
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_then_dagger_is_identity() {
        let mut rng = seeded_rng(4, 0);
        let letters = ['I', 'X', 'Y', 'Z'];
        for prep in [Prep::Zero, Prep::GhzPlus, Prep::GhzMinus, Prep::Basis { qubits: vec![1] }] {
            let mut c = Circuit::new(6, prep);
            for _ in 0..120 {
                let label: String = (0..6).map(|_| letters[rng.random_range(0..4)]).collect();
                c.push(rng.random::<f64>() * 3.0, p(&label)).unwrap();
            }
            let s0 = random_state(6, &mut rng);
            let mut s = s0.clone();
            apply_circuit(&mut s, &c, false).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            apply_circuit(&mut s, &c, true).unwrap();
            assert!(max_diff(&s, &s0) < 1e-9);
        }
    }

    #[test]
    fn empty_and_single_layer_circuits() {
        let mut rng = seeded_rng(5, 0);
        let s0 = random_state(3, &mut rng);
        let mut s = s0.clone();
        apply_circuit(&mut s, &Circuit::identity(3), false).unwrap();
        assert_eq!(s, s0);

        let mut c = Circuit::identity(3);
        c.push(0.7, p("XZY")).unwrap();
        let mut a = s0.clone();
        apply_circuit(&mut a, &c, false).unwrap();
        let mut b = s0.clone();
        apply_pauli_rotation(&mut b, &p("XZY"), 0.7).unwrap();
        assert_eq!(a, b);
        assert!(apply_circuit(&mut StateVector::zero(2).unwrap(), &c, false).is_err());
    }

    #[test]
    fn expectation_examples() {
        let zero = StateVector::zero(1).unwrap();
        let hz = Hamiltonian::from_labels(&[(1.0, "Z")]).unwrap();
        let hx = Hamiltonian::from_labels(&[(1.0, "X")]).unwrap();
        assert_eq!(zero.expectation(&hz).unwrap(), 1.0);
        assert_eq!(zero.expectation(&hx).unwrap(), 0.0);
    }

    #[test]
    fn expectation_matches_dense_quadratic_form() {
        let mut rng = seeded_rng(6, 0);
        let h = Hamiltonian::from_labels(&[(0.4, "XYZI"), (-1.1, "ZZII"), (0.25, "IYYX"), (0.9, "XIIX")]).unwrap();
        let m = dense::hamiltonian_matrix(&h);
        for _ in 0..10 {
            let s = random_state(4, &mut rng);
            let v = DVector::from_column_slice(s.amps());
            let e = (v.adjoint() * &m * &v)[(0, 0)].re;
            assert!((s.expectation(&h).unwrap() - e).abs() < 1e-9);
            let hv = s.apply_hamiltonian(&h).unwrap();
            let d = hv.amps().iter().zip((&m * &v).iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn inner_products() {
        let a = StateVector::basis(2, 1).unwrap();
        let b = StateVector::basis(2, 2).unwrap();
        assert_eq!(a.inner(&b).unwrap(), ZERO);
        assert_eq!(a.inner(&a).unwrap(), ONE);
        let mut rng = seeded_rng(7, 0);
        let x = random_state(3, &mut rng);
        let y = random_state(3, &mut rng);
        assert!((x.inner(&y).unwrap() - y.inner(&x).unwrap().conj()).norm() < 1e-15);
        assert!(a.inner(&StateVector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn sampling_deterministic_and_binomial() {
        let mut rng = seeded_rng(8, 0);
        let s = StateVector::basis(3, 5).unwrap();
        let c = s.sample(1000, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&5], 1000);

        let plus = StateVector::init(1, &Prep::GhzPlus).unwrap();
        let chi = 1_000_000u64;
        let c = plus.sample(chi, &mut rng).unwrap();
        assert_eq!(c.values().sum::<u64>(), chi);
        let sigma = (chi as f64 * 0.25).sqrt();
        for j in [0u64, 1] {
            assert!((c[&j] as f64 - chi as f64 / 2.0).abs() < 5.0 * sigma);
        }

        let again = plus.sample(500, &mut seeded_rng(9, 1)).unwrap();
        assert_eq!(again, plus.sample(500, &mut seeded_rng(9, 1)).unwrap());

        let mut bad = StateVector::zero(1).unwrap();
        bad.amps_mut()[1] = ONE;
        assert!(matches!(bad.sample(10, &mut rng), Err(Error::NotNormalized(_))));
        assert!(s.sample(0, &mut rng).is_err());
    }

    #[test]
    fn controlled_pauli_acts_on_matching_branch_only() {
        // qubit 0 is the control (most significant bit)
        let mut s = StateVector::init(2, &Prep::GhzPlus).unwrap();
        s.apply_controlled_pauli(0b10, 0b10, &p("IX")).unwrap();
        assert!((s.amp(0b00).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amp(0b10).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(s.apply_controlled_pauli(0b10, 0, &p("XI")).is_err());
    }

    #[test]
    fn byte_dump_round_trips() {
        let mut rng = seeded_rng(10, 0);
        let s = random_state(3, &mut rng);
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 8 + 16 * 8);
        assert_eq!(StateVector::from_bytes(&bytes).unwrap(), s);
        assert!(StateVector::from_bytes(&bytes[..20]).is_err());
    }
}
