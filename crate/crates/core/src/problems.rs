//! Benchmark Hamiltonians and their default initial states.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ite::{exact_ground, reachable_sector, GroundState};
use crate::pauli::{Hamiltonian, PauliString};
use crate::simulator::{seeded_rng, Prep};

/// Pairing attempts per subseed before the generator moves to the next subseed.
const PAIRING_ATTEMPTS: usize = 1000;
const MAX_SUBSEEDS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutInstance {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<Edge>,
    /// Pairing-model stream that produced the graph.
    pub subseed: u64,
}

impl MaxCutInstance {
    /// `min_s sum w_ab s_a s_b` over all spin assignments.
    pub fn brute_force_minimum(&self) -> f64 {
        (0..1u64 << self.n)
            .map(|s| {
                self.edges
                    .iter()
                    .map(|e| {
                        let same = ((s >> e.a) ^ (s >> e.b)) & 1 == 0;
                        if same {
                            e.weight
                        } else {
                            -e.weight
                        }
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("a,b,weight\n");
        for e in &self.edges {
            out.push_str(&format!("{},{},{}\n", e.a, e.b, e.weight));
        }
        out
    }
}

fn random_regular_edges(n: usize, k: usize, rng: &mut crate::simulator::Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        stubs.shuffle(rng);
        let mut seen = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
        }
        return Some(seen.into_iter().collect());
    }
    None
}

/// Random `k`-regular graph with weights uniform on `[0, J]` and one `X_a X_b` term per edge.
pub fn maxcut(n: usize, k: usize, j: f64, seed: u64) -> Result<(MaxCutInstance, Hamiltonian)> {
    if k == 0 || k >= n || (n * k) % 2 == 1 {
        return Err(Error::InvalidArgument(format!("no {k}-regular graph on {n} vertices")));
    }
    for subseed in 0..MAX_SUBSEEDS {
        let mut rng = seeded_rng(seed, subseed);
        let Some(pairs) = random_regular_edges(n, k, &mut rng) else { continue };
        let edges: Vec<Edge> = pairs.into_iter().map(|(a, b)| Edge { a, b, weight: rng.random::<f64>() * j }).collect();
        let mut h = Hamiltonian::new(n);
        for e in &edges {
            h.push(e.weight, PauliString::from_masks(n, (1 << (n - 1 - e.a)) | (1 << (n - 1 - e.b)), 0)?)?;
        }
        return Ok((MaxCutInstance { n, k, edges, subseed }, h));
    }
    Err(Error::Numerical(format!("pairing model failed for n={n}, k={k}")))
}

/// Open chain `-J sum Z_t Z_{t+1} + h_x sum X_t`, `ZZ` terms first.
pub fn tfim(n: usize, j: f64, hx: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument("TFIM chain needs at least 2 sites".into()));
    }
    let mut h = Hamiltonian::new(n);
    for t in 0..n - 1 {
        h.push(-j, PauliString::from_masks(n, 0, 0b11 << (n - 2 - t))?)?;
    }
    if hx != 0.0 {
        for t in 0..n {
            h.push(hx, PauliString::from_masks(n, 1 << (n - 1 - t), 0)?)?;
        }
    }
    Ok(h)
}

/// The fixed six-qubit, six-term validation instance (units of `J`).
pub fn validation_hamiltonian() -> Hamiltonian {
    Hamiltonian::from_labels(&[
        (0.961, "XXYIII"),
        (0.853, "YIYIIY"),
        (0.137, "YIXYII"),
        (0.980, "XIIIXY"),
        (0.712, "YIIIYX"),
        (0.962, "XIYYII"),
    ])
    .expect("static labels are valid")
}

/// `n_terms` distinct strings with exactly `k` non-identity factors from `ops`
/// and weights uniform on `(0, 1]`.
pub fn random_klocal(n: usize, k: usize, n_terms: usize, ops: &str, seed: u64) -> Result<Hamiltonian> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let ops: Vec<char> = ops.chars().collect();
    if ops.is_empty() || ops.iter().any(|c| !matches!(c, 'X' | 'Y' | 'Z')) {
        return Err(Error::InvalidArgument("operator set must be a non-empty subset of XYZ".into()));
    }
    let mut rng = seeded_rng(seed, 0);
    let mut seen = BTreeSet::new();
    let mut h = Hamiltonian::new(n);
    let mut positions: Vec<usize> = (0..n).collect();
    let mut attempts = 0;
    while h.len() < n_terms {
        attempts += 1;
        if attempts > 1000 * n_terms.max(1) {
            return Err(Error::InvalidArgument(format!("cannot draw {n_terms} distinct {k}-local strings on {n} qubits")));
        }
        positions.shuffle(&mut rng);
        let mut label = vec!['I'; n];
        for &q in &positions[..k] {
            label[q] = ops[rng.random_range(0..ops.len())];
        }
        let label: String = label.into_iter().collect();
        let weight = 1.0 - rng.random::<f64>();
        if seen.insert(label.clone()) {
            h.push(weight, PauliString::parse(&label)?)?;
        }
    }
    Ok(h)
}

const NUCLEAR_DATA: &str = include_str!("../data/nuclear_pshell.txt");
const NUCLEAR_SHA256: &str = "da0839f6aac69ae748b0e3848c0f6897ac00063d62fb17d6fd5695e99c3f2f27";
pub const NUCLEAR_TERMS: usize = 84;

/// Occupied qubits of the two-neutron starting configurations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuclearPresets {
    /// `m = +3/2` and `m = -3/2`.
    pub m0: Vec<usize>,
    /// `m = +1/2` and `m = +3/2`.
    pub m2: Vec<usize>,
}

impl Default for NuclearPresets {
    fn default() -> Self {
        NuclearPresets { m0: vec![2, 5], m2: vec![2, 3] }
    }
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// The bundled six-qubit p-shell Hamiltonian.
pub fn nuclear_pshell() -> Result<(Hamiltonian, NuclearPresets)> {
    let found = sha256_hex(NUCLEAR_DATA.as_bytes());
    if found != NUCLEAR_SHA256 {
        return Err(Error::Checksum { expected: NUCLEAR_SHA256.into(), found });
    }
    let h = Hamiltonian::parse_text(NUCLEAR_DATA)?;
    Ok((h, NuclearPresets::default()))
}

pub fn nuclear_data_checksum() -> &'static str {
    NUCLEAR_SHA256
}

/// Order-preserving load of a weight/label file.
pub fn load_hamiltonian(path: impl AsRef<std::path::Path>) -> Result<Hamiltonian> {
    Hamiltonian::load(path)
}

fn default_one() -> f64 {
    1.0
}

fn default_ops() -> String {
    "XY".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Maxcut {
        n: usize,
        k: usize,
        #[serde(rename = "J", default = "default_one")]
        j: f64,
        #[serde(default)]
        seed: u64,
    },
    Tfim {
        n: usize,
        #[serde(rename = "J", default = "default_one")]
        j: f64,
        #[serde(default = "default_one")]
        h_x: f64,
    },
    RandomKlocal {
        n: usize,
        k: usize,
        n_terms: usize,
        #[serde(default = "default_ops")]
        ops: String,
        #[serde(default)]
        seed: u64,
    },
    #[serde(rename = "validation-6q")]
    Validation6q,
    File {
        path: PathBuf,
        #[serde(default)]
        prep: Option<Prep>,
    },
    NuclearPshell {
        /// Occupied qubits of the starting configuration; the `M = 0` preset when absent.
        #[serde(default)]
        occupied: Option<Vec<usize>>,
    },
}

/// A generated Hamiltonian with its default start state and, when the model
/// conserves a quantum number, the sector reachable from that state.
#[derive(Clone, Debug)]
pub struct Problem {
    pub hamiltonian: Hamiltonian,
    pub prep: Prep,
    pub sector: Option<BTreeSet<u64>>,
    pub graph: Option<MaxCutInstance>,
}

impl Problem {
    pub fn exact_ground(&self) -> Result<GroundState> {
        match &self.sector {
            Some(s) => exact_ground(&self.hamiltonian, Some(&|b| s.contains(&b))),
            None => exact_ground(&self.hamiltonian, None),
        }
    }
}

fn basis_index(n: usize, occupied: &[usize]) -> Result<u64> {
    occupied.iter().try_fold(0u64, |m, &q| {
        if q >= n {
            Err(Error::InvalidArgument(format!("occupied qubit {q} out of range")))
        } else {
            Ok(m | 1 << (n - 1 - q))
        }
    })
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        let plain = |hamiltonian| Problem { hamiltonian, prep: Prep::Zero, sector: None, graph: None };
        Ok(match self {
            ProblemSpec::Maxcut { n, k, j, seed } => {
                let (g, h) = maxcut(*n, *k, *j, *seed)?;
                Problem { graph: Some(g), ..plain(h) }
            }
            ProblemSpec::Tfim { n, j, h_x } => plain(tfim(*n, *j, *h_x)?),
            ProblemSpec::RandomKlocal { n, k, n_terms, ops, seed } => plain(random_klocal(*n, *k, *n_terms, ops, *seed)?),
            ProblemSpec::Validation6q => plain(validation_hamiltonian()),
            ProblemSpec::File { path, prep } => {
                let h = load_hamiltonian(path)?;
                let prep = prep.clone().unwrap_or_default();
                prep.validate(h.n())?;
                Problem { prep, ..plain(h) }
            }
            ProblemSpec::NuclearPshell { occupied } => {
                let (h, presets) = nuclear_pshell()?;
                let occ = occupied.clone().unwrap_or(presets.m0);
                let start = basis_index(h.n(), &occ)?;
                let sector = reachable_sector(&h, start);
                Problem { prep: Prep::Basis { qubits: occ }, sector: Some(sector), ..plain(h) }
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Maxcut { .. } => "maxcut",
            ProblemSpec::Tfim { .. } => "tfim",
            ProblemSpec::RandomKlocal { .. } => "random-klocal",
            ProblemSpec::Validation6q => "validation-6q",
            ProblemSpec::File { .. } => "file",
            ProblemSpec::NuclearPshell { .. } => "nuclear-pshell",
        }
    }
}
