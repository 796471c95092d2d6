//! Pauli strings in symplectic form and weighted sums of them.
//!
//! Qubit `q` (0-based, counted from the left of a label) lives at bit
//! `n - 1 - q` of both masks and of computational-basis indices, so the
//! label `"XII"` flips the most significant bit of a 3-qubit index.
//!
//! A string with masks `(x, z)` and phase exponent `p` is the operator
//! `i^p * i^{|x & z|} * X^x Z^z`; the `i^{|x & z|}` factor turns every
//! `XZ` pair into a plain `Y`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest qubit count representable by the `u64` masks.
pub const MAX_QUBITS: usize = 64;

/// `i^k` for `k` taken mod 4.
#[inline]
pub fn i_pow(k: u32) -> C64 {
    match k & 3 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[inline]
fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: 0, z: 0, phase: 0 }
    }

    /// Builds a plain (phase 0) string from its masks.
    pub fn from_masks(n: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let m = full_mask(n);
        if x_mask & !m != 0 || z_mask & !m != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask does not fit in {n} qubits"
            )));
        }
        Ok(PauliString { n, x: x_mask, z: z_mask, phase: 0 })
    }

    /// Parses a label over `{I,X,Y,Z}`; the leftmost character is qubit 0.
    pub fn parse(label: &str) -> Result<Self> {
        let n = label.chars().count();
        if n == 0 {
            return Err(Error::EmptyLabel);
        }
        if n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, c) in label.chars().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match c {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                found => return Err(Error::InvalidPauliChar { position: q + 1, found }),
            }
        }
        Ok(PauliString { n, x, z, phase: 0 })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    #[inline]
    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    /// Bit position of qubit `q`.
    #[inline]
    pub fn bit_of(&self, q: usize) -> u64 {
        1u64 << (self.n - 1 - q)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True for a plain tensor product (no global phase).
    pub fn is_plain(&self) -> bool {
        self.phase == 0
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Single-qubit factor on qubit `q`, ignoring the global phase.
    pub fn factor(&self, q: usize) -> char {
        let b = self.bit_of(q);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    /// Qubits with a non-identity factor, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| (self.x | self.z) & self.bit_of(q) != 0).collect()
    }

    /// The label without the phase prefix.
    pub fn label(&self) -> String {
        (0..self.n).map(|q| self.factor(q)).collect()
    }

    /// Same operator with its phase exponent replaced.
    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase = phase_exp & 3;
        self
    }

    fn check_same(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    /// The same operator on `n + extra` qubits, with identities on the new
    /// leftmost qubits. Masks are unchanged because new qubits sit above bit `n - 1`.
    pub fn widen(&self, extra: usize) -> Result<PauliString> {
        if self.n + extra > MAX_QUBITS {
            return Err(Error::QubitCount(self.n + extra));
        }
        Ok(PauliString { n: self.n + extra, ..*self })
    }

    /// Operator product `self * other` with the accumulated phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_same(other)?;
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // Z^{z1} X^{x2} = (-1)^{|z1 & x2|} X^{x2} Z^{z1}
        let k = self.phase as u32
            + other.phase as u32
            + (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 3 * (x & z).count_ones();
        Ok(PauliString { n: self.n, x, z, phase: (k & 3) as u8 })
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_same(other)?;
        let overlap = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        Ok(overlap % 2 == 0)
    }

    /// Action on a basis state: `P|j> = c |j'>`.
    #[inline]
    pub fn apply_to_basis(&self, j: u64) -> (u64, C64) {
        let k = self.base_phase() + 2 * (j & self.z).count_ones();
        (j ^ self.x, i_pow(k))
    }

    /// Phase exponent shared by every basis state, before the `(-1)^{|j & z|}` sign.
    #[inline]
    pub(crate) fn base_phase(&self) -> u32 {
        self.phase as u32 + (self.x & self.z).count_ones()
    }

    /// Checked variant of [`apply_to_basis`](Self::apply_to_basis).
    pub fn apply_to_basis_checked(&self, j: u64) -> Result<(u64, C64)> {
        if j & !full_mask(self.n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "basis index {j} does not fit in {} qubits",
                self.n
            )));
        }
        Ok(self.apply_to_basis(j))
    }

    /// X on every set bit of `j`; maps `|0...0>` to `|j>`.
    pub fn p_imag_for(n: usize, j: u64) -> Result<PauliString> {
        if j == 0 {
            return Err(Error::InvalidArgument("bitstring 0 has no generator".into()));
        }
        PauliString::from_masks(n, j, 0)
    }

    /// Like [`p_imag_for`](Self::p_imag_for) with the X on the lowest-index
    /// qubit (most significant set bit) replaced by Y; maps `|0...0>` to `i|j>`.
    pub fn p_real_for(n: usize, j: u64) -> Result<PauliString> {
        let p = PauliString::p_imag_for(n, j)?;
        let top = 1u64 << (63 - j.leading_zeros());
        Ok(PauliString { z: top, ..p })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}{}", self.label())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts the `Display` form, including an optional `i`, `-` or `-i` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else {
            (0, s)
        };
        Ok(PauliString::parse(rest)?.with_phase(phase))
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PauliString {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// `parse_pauli` under its operation name.
pub fn parse_pauli(label: &str) -> Result<PauliString> {
    PauliString::parse(label)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    pub pauli: PauliString,
}

/// `H = constant * I + sum_k w_k Q_k` with the terms kept in insertion order.
///
/// Identity strings never appear in `terms`; they are folded into `constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<Term>,
    #[serde(default)]
    constant: f64,
}

impl Hamiltonian {
    pub fn new(n: usize) -> Self {
        Hamiltonian { n, terms: Vec::new(), constant: 0.0 }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut h = Hamiltonian::new(n);
        for (w, p) in terms {
            h.push(w, p)?;
        }
        Ok(h)
    }

    /// Builds from `(weight, label)` pairs.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("no terms".into()))?;
        let n = first.1.len();
        let mut h = Hamiltonian::new(n);
        for &(w, l) in terms {
            h.push(w, PauliString::parse(l)?)?;
        }
        Ok(h)
    }

    pub fn push(&mut self, weight: f64, pauli: PauliString) -> Result<()> {
        if pauli.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, found: pauli.n() });
        }
        if !pauli.is_plain() {
            return Err(Error::InvalidArgument(format!(
                "term {pauli} carries a phase and is not Hermitian"
            )));
        }
        if !weight.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite weight {weight}")));
        }
        if pauli.is_identity() {
            self.constant += weight;
        } else {
            self.terms.push(Term { weight, pauli });
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of (non-identity) terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// True when every pair of terms commutes.
    pub fn all_commute(&self) -> bool {
        self.terms.iter().enumerate().all(|(a, ta)| {
            self.terms[a + 1..]
                .iter()
                .all(|tb| ta.pauli.commutes(&tb.pauli).unwrap_or(false))
        })
    }

    /// Parses the `weight label` line format.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut h: Option<Hamiltonian> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(w), Some(label), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `weight label`, got {line:?}"),
                });
            };
            let weight: f64 = w.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("malformed weight {w:?}"),
            })?;
            let pauli = PauliString::parse(label).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let h = h.get_or_insert_with(|| Hamiltonian::new(pauli.n()));
            if pauli.n() != h.n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("label has {} qubits, expected {}", pauli.n(), h.n),
                });
            }
            h.push(weight, pauli).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        }
        match h {
            Some(h) if !h.is_empty() || h.constant != 0.0 => Ok(h),
            _ => Err(Error::InvalidArgument("empty Hamiltonian".into())),
        }
    }

    /// Writes one `weight label` line per term; the constant is written as an identity term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.constant != 0.0 {
            out.push_str(&format!("{} {}\n", self.constant, "I".repeat(self.n)));
        }
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", t.weight, t.pauli.label()));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Hamiltonian::parse_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    #[test]
    fn parse_sets_masks_from_the_left() {
        let a = p("XIZ");
        assert_eq!(a.x_mask(), 0b100);
        assert_eq!(a.z_mask(), 0b001);
        assert_eq!(a.phase_exp(), 0);

        let b = p("YXYZZX");
        assert_eq!(b.x_mask(), 0b111001);
        assert_eq!(b.z_mask(), 0b101110);
        assert_eq!(b.factor(0), 'Y');
        assert_eq!(b.factor(2), 'Y');
        assert_eq!(b.label(), "YXYZZX");
    }

    #[test]
    fn parse_reports_one_based_position() {
        match PauliString::parse("AZ") {
            Err(Error::InvalidPauliChar { position, found }) => {
                assert_eq!(position, 1);
                assert_eq!(found, 'A');
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(PauliString::parse(""), Err(Error::EmptyLabel)));
        assert!(matches!(
            PauliString::parse("XXq"),
            Err(Error::InvalidPauliChar { position: 3, .. })
        ));
    }

    #[test]
    fn single_qubit_products() {
        let xy = p("X").multiply(&p("Y")).unwrap();
        assert_eq!(xy.label(), "Z");
        assert_eq!(xy.phase_exp(), 1);
        let xx = p("X").multiply(&p("X")).unwrap();
        assert!(xx.is_identity());
        assert_eq!(xx.phase_exp(), 0);
        let yx = p("Y").multiply(&p("X")).unwrap();
        assert_eq!(yx.label(), "Z");
        assert_eq!(yx.phase_exp(), 3);
        assert!(p("X").multiply(&p("XX")).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XI").commutes(&p("IZ")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(p("XX").commutes(&p("IZ")).is_ok());
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn basis_action_examples() {
        assert_eq!(p("Z").apply_to_basis(0), (0, C64::new(1.0, 0.0)));
        assert_eq!(p("Y").apply_to_basis(1), (0, C64::new(0.0, -1.0)));
        assert_eq!(p("Y").apply_to_basis(0), (1, C64::new(0.0, 1.0)));
        assert!(p("XX").apply_to_basis_checked(4).is_err());
    }

    #[test]
    fn generators_for_bitstrings() {
        assert_eq!(PauliString::p_imag_for(3, 0b100).unwrap().label(), "XII");
        let pi = PauliString::p_imag_for(3, 0b110).unwrap();
        assert_eq!(pi.label(), "XXI");
        assert_eq!(pi.apply_to_basis(0), (0b110, C64::new(1.0, 0.0)));
        assert!(PauliString::p_imag_for(3, 0).is_err());

        let pr = PauliString::p_real_for(3, 0b100).unwrap();
        assert_eq!(pr.label(), "YII");
        assert_eq!(pr.apply_to_basis(0), (0b100, C64::new(0.0, 1.0)));
        assert_eq!(PauliString::p_real_for(3, 0b110).unwrap().label(), "YXI");
        assert!(PauliString::p_real_for(3, 0).is_err());
    }

    #[test]
    fn generators_exhaustive_up_to_six_qubits() {
        for n in 1..=6 {
            for j in 1..(1u64 << n) {
                let (ji, ci) = PauliString::p_imag_for(n, j).unwrap().apply_to_basis(0);
                let (jr, cr) = PauliString::p_real_for(n, j).unwrap().apply_to_basis(0);
                assert_eq!((ji, ci), (j, C64::new(1.0, 0.0)));
                assert_eq!((jr, cr), (j, C64::new(0.0, 1.0)));
            }
        }
    }

    #[test]
    fn display_round_trips_with_phase() {
        let q = p("XZ").multiply(&p("ZX")).unwrap();
        let s = q.to_string();
        assert_eq!(s.parse::<PauliString>().unwrap(), q);
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<PauliString>(&json).unwrap(), q);
    }

    #[test]
    fn hamiltonian_text_format() {
        let text = "# demo\n0.5 XZ\n\n-1.25 YY  # trailing\n2 II\n";
        let h = Hamiltonian::parse_text(text).unwrap();
        assert_eq!(h.n(), 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h.constant(), 2.0);
        assert_eq!(h.terms()[1].weight, -1.25);
        let again = Hamiltonian::parse_text(&h.to_text()).unwrap();
        assert_eq!(again, h);
    }

    #[test]
    fn hamiltonian_text_errors_carry_line_numbers() {
        assert!(matches!(
            Hamiltonian::parse_text("1.0 XX\n0.3 XXX\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Hamiltonian::parse_text("1.0 XX\nabc ZZ\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Hamiltonian::parse_text("1.0 XX extra\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Hamiltonian::parse_text("# nothing\n\n").is_err());
    }
}
