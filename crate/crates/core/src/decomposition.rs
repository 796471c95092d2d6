//! Elementary-gate decomposition of `exp(i alpha P)` for gate accounting.
//!
//! Every non-identity factor is first rotated onto `X`, then the string
//! `X...X` is contracted pairwise with the two-qubit gate `R` (which satisfies
//! `R X_a X_b R^† = X_b`) until only a two-qubit `exp(i alpha X X)` core is left.
//! Supports are contracted in ascending qubit order.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Largest register `build_unitary` will materialize.
pub const MAX_UNITARY_QUBITS: usize = 8;

/// Qubits are label positions (0 = leftmost).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    /// `[[cos t/2, -e^{il} sin t/2], [e^{ip} sin t/2, e^{i(p+l)} cos t/2]]`.
    U3 { qubit: usize, theta: f64, phi: f64, lambda: f64 },
    Cnot { control: usize, target: usize },
    /// Two-qubit core `exp(i alpha X_a X_b)`.
    Rxx { a: usize, b: usize, alpha: f64 },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::U3 { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Rxx { a, b, .. } => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        !matches!(self, Gate::U3 { .. })
    }

    pub fn dagger(&self) -> Gate {
        match *self {
            Gate::U3 { qubit, theta, phi, lambda } => Gate::U3 { qubit, theta: -theta, phi: -lambda, lambda: -phi },
            Gate::Cnot { .. } => *self,
            Gate::Rxx { a, b, alpha } => Gate::Rxx { a, b, alpha: -alpha },
        }
    }
}

/// Gates in application order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateList {
    pub gates: Vec<Gate>,
}

impl GateList {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn dagger(&self) -> GateList {
        GateList { gates: self.gates.iter().rev().map(Gate::dagger).collect() }
    }
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

/// `(theta, phi, lambda)` with `m = e^{i g} U3(theta, phi, lambda)` for some global phase `g`.
pub fn u3_angles(m: &[[C64; 2]; 2]) -> (f64, f64, f64) {
    let c = m[0][0].norm();
    let s = m[1][0].norm();
    let theta = 2.0 * s.atan2(c);
    if s < 1e-14 {
        let g = m[0][0].arg();
        (theta, 0.0, m[1][1].arg() - g)
    } else if c < 1e-14 {
        let g = m[1][0].arg();
        (theta, 0.0, (-m[0][1]).arg() - g)
    } else {
        let g = m[0][0].arg();
        (theta, m[1][0].arg() - g, (-m[0][1]).arg() - g)
    }
}

fn h_gate(qubit: usize) -> Gate {
    Gate::U3 { qubit, theta: FRAC_PI_2, phi: 0.0, lambda: PI }
}

fn sdg_gate(qubit: usize) -> Gate {
    Gate::U3 { qubit, theta: 0.0, phi: 0.0, lambda: -FRAC_PI_2 }
}

/// `R = (1/2)(I + i Z_2)(I - i X_1 Z_2)`, first qubit most significant.
pub fn r_gate_matrix() -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    let id = DMatrix::<C64>::identity(4, 4);
    let x = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let z = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]);
    let i2 = DMatrix::<C64>::identity(2, 2);
    let z2 = i2.kronecker(&z);
    let x1z2 = x.kronecker(&z);
    (&id + &z2 * i) * (&id - &x1z2 * i) * C64::new(0.5, 0.0)
}

/// `R` on `(a, b)` as one CNOT dressed by four single-qubit gates.
pub fn r_gate(a: usize, b: usize) -> GateList {
    GateList {
        gates: vec![
            Gate::U3 { qubit: a, theta: FRAC_PI_2, phi: 0.0, lambda: 0.0 },
            Gate::U3 { qubit: b, theta: FRAC_PI_2, phi: 0.0, lambda: 0.0 },
            Gate::Cnot { control: a, target: b },
            Gate::U3 { qubit: a, theta: FRAC_PI_2, phi: PI, lambda: FRAC_PI_2 },
            Gate::U3 { qubit: b, theta: FRAC_PI_2, phi: 0.0, lambda: -PI },
        ],
    }
}

/// Gate sequence for `exp(i alpha P)`, up to a global phase.
pub fn decompose_rotation(p: &PauliString, alpha: f64) -> Result<GateList> {
    if p.is_identity() {
        return Err(Error::InvalidArgument("cannot decompose a rotation about the identity".into()));
    }
    if !p.is_plain() {
        return Err(Error::InvalidArgument("rotation generator must be Hermitian (no phase)".into()));
    }
    let support = p.support();
    if support.len() == 1 {
        let q = support[0];
        let single = PauliString::parse(&p.factor(q).to_string())?;
        let m = crate::dense::rotation_matrix(&single, alpha);
        let (theta, phi, lambda) = u3_angles(&[[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
        return Ok(GateList { gates: vec![Gate::U3 { qubit: q, theta, phi, lambda }] });
    }

    let mut basis = Vec::new();
    for &q in &support {
        match p.factor(q) {
            'Z' => basis.push(h_gate(q)),
            'Y' => basis.push(sdg_gate(q)),
            _ => {}
        }
    }
    let mut ladder = GateList::default();
    for w in support.windows(2).take(support.len() - 2) {
        ladder.gates.extend(r_gate(w[0], w[1]).gates);
    }
    let m = support.len();
    let mut gates = basis.clone();
    gates.extend(ladder.gates.iter().copied());
    gates.push(Gate::Rxx { a: support[m - 2], b: support[m - 1], alpha });
    gates.extend(ladder.dagger().gates);
    gates.extend(basis.iter().rev().map(Gate::dagger));
    Ok(GateList { gates })
}

/// `(one_qubit, two_qubit)` counts.
pub fn gate_count(gl: &GateList) -> (usize, usize) {
    gl.gates.iter().fold((0, 0), |(a, b), g| if g.is_two_qubit() { (a, b + 1) } else { (a + 1, b) })
}

fn mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut r = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// Merges runs of single-qubit gates on the same qubit into one `U3` and drops
/// runs that reduce to a phase. Two-qubit gates are kept as they are.
pub fn fuse_single_qubit(gl: &GateList) -> GateList {
    use std::collections::BTreeMap;
    let mut out = Vec::with_capacity(gl.len());
    let mut pending: BTreeMap<usize, [[C64; 2]; 2]> = BTreeMap::new();
    let flush = |q: usize, pending: &mut BTreeMap<usize, [[C64; 2]; 2]>, out: &mut Vec<Gate>| {
        if let Some(m) = pending.remove(&q) {
            // identity up to phase: off-diagonal vanishes and diagonal phases agree
            let phase_only = m[1][0].norm() < 1e-12 && (m[1][1] - m[0][0]).norm() < 1e-12;
            if !phase_only {
                let (theta, phi, lambda) = u3_angles(&m);
                out.push(Gate::U3 { qubit: q, theta, phi, lambda });
            }
        }
    };
    for g in &gl.gates {
        match *g {
            Gate::U3 { qubit, theta, phi, lambda } => {
                let m = u3_matrix(theta, phi, lambda);
                let acc = pending.entry(qubit).or_insert([[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);
                *acc = mul2(&m, acc);
            }
            _ => {
                for q in g.qubits() {
                    flush(q, &mut pending, &mut out);
                }
                out.push(*g);
            }
        }
    }
    let rest: Vec<usize> = pending.keys().copied().collect();
    for q in rest {
        flush(q, &mut pending, &mut out);
    }
    GateList { gates: out }
}

fn apply_1q_columns(u: &mut DMatrix<C64>, bit: usize, g: &[[C64; 2]; 2]) {
    let hb = 1usize << bit;
    for mut col in u.column_iter_mut() {
        for j in 0..col.len() {
            if j & hb == 0 {
                let a = col[j];
                let b = col[j | hb];
                col[j] = g[0][0] * a + g[0][1] * b;
                col[j | hb] = g[1][0] * a + g[1][1] * b;
            }
        }
    }
}

/// Dense product of the gates in application order.
pub fn build_unitary(gl: &GateList, n: usize) -> Result<DMatrix<C64>> {
    if n == 0 || n > MAX_UNITARY_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::<C64>::identity(dim, dim);
    let bit = |q: usize| -> Result<usize> {
        if q >= n {
            Err(Error::InvalidArgument(format!("gate qubit {q} outside {n}-qubit register")))
        } else {
            Ok(n - 1 - q)
        }
    };
    for g in &gl.gates {
        match *g {
            Gate::U3 { qubit, theta, phi, lambda } => {
                apply_1q_columns(&mut u, bit(qubit)?, &u3_matrix(theta, phi, lambda));
            }
            Gate::Cnot { control, target } => {
                let (c, t) = (1usize << bit(control)?, 1usize << bit(target)?);
                for mut col in u.column_iter_mut() {
                    for j in 0..dim {
                        if j & c != 0 && j & t == 0 {
                            col.swap_rows(j, j | t);
                        }
                    }
                }
            }
            Gate::Rxx { a, b, alpha } => {
                let mask = (1usize << bit(a)?) | (1usize << bit(b)?);
                let (s, cs) = alpha.sin_cos();
                let is = C64::new(0.0, s);
                for mut col in u.column_iter_mut() {
                    for j in 0..dim {
                        let k = j ^ mask;
                        if j < k {
                            let (x, y) = (col[j], col[k]);
                            col[j] = x * cs + is * y;
                            col[k] = y * cs + is * x;
                        }
                    }
                }
            }
        }
    }
    Ok(u)
}

/// One row of the `decompose-check` report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub n: usize,
    pub weight: usize,
    pub strings: usize,
    pub max_gates_1q: usize,
    pub max_gates_2q: usize,
    pub max_deviation: f64,
}

/// Compares decompositions of the given strings against the dense exponential,
/// grouped by weight.
pub fn check_strings(strings: &[(PauliString, f64)]) -> Result<Vec<CheckRow>> {
    use std::collections::BTreeMap;
    let mut rows: BTreeMap<(usize, usize), CheckRow> = BTreeMap::new();
    for (p, alpha) in strings {
        let gl = decompose_rotation(p, *alpha)?;
        let u = build_unitary(&gl, p.n())?;
        let (dev, _) = crate::dense::phase_aligned_deviation(&u, &crate::dense::rotation_matrix(p, *alpha));
        let (g1, g2) = gate_count(&gl);
        let row = rows.entry((p.n(), p.weight() as usize)).or_insert(CheckRow {
            n: p.n(),
            weight: p.weight() as usize,
            strings: 0,
            max_gates_1q: 0,
            max_gates_2q: 0,
            max_deviation: 0.0,
        });
        row.strings += 1;
        row.max_gates_1q = row.max_gates_1q.max(g1);
        row.max_gates_2q = row.max_gates_2q.max(g2);
        row.max_deviation = row.max_deviation.max(dev);
    }
    Ok(rows.into_values().collect())
}

/// Every non-identity string for `n = 1..=max_n`, then `n_random` random
/// strings with `n` drawn from `random_n`, each with a random angle in `(-pi, pi)`.
pub fn check_suite(max_n: usize, n_random: usize, random_n: std::ops::RangeInclusive<usize>, seed: u64) -> Result<Vec<(PauliString, f64)>> {
    use rand::Rng as _;
    if *random_n.end() > MAX_UNITARY_QUBITS || max_n > MAX_UNITARY_QUBITS {
        return Err(Error::QubitCount(max_n.max(*random_n.end())));
    }
    let mut rng = crate::simulator::seeded_rng(seed, 0);
    let mut out = Vec::new();
    for n in 1..=max_n {
        let dim = 1u64 << n;
        for x in 0..dim {
            for z in 0..dim {
                if x | z != 0 {
                    out.push((PauliString::from_masks(n, x, z)?, rng.random_range(-PI..PI)));
                }
            }
        }
    }
    for _ in 0..n_random {
        let n = rng.random_range(random_n.clone());
        let dim = 1u64 << n;
        let (x, z) = loop {
            let (x, z) = (rng.random_range(0..dim), rng.random_range(0..dim));
            if x | z != 0 {
                break (x, z);
            }
        };
        out.push((PauliString::from_masks(n, x, z)?, rng.random_range(-PI..PI)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{phase_aligned_deviation, rotation_matrix};

    fn p(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    fn deviation(label: &str, alpha: f64) -> f64 {
        let q = p(label);
        let u = build_unitary(&decompose_rotation(&q, alpha).unwrap(), q.n()).unwrap();
        phase_aligned_deviation(&u, &rotation_matrix(&q, alpha)).0
    }

    #[test]
    fn r_gate_is_unitary_and_contracts_xx() {
        let r = r_gate_matrix();
        let id = DMatrix::<C64>::identity(4, 4);
        assert!((&r * r.adjoint() - &id).norm() < 1e-12);
        let xx = crate::dense::pauli_matrix(&p("XX"));
        let ix = crate::dense::pauli_matrix(&p("IX"));
        assert!((&r * xx * r.adjoint() - ix).norm() < 1e-12);
    }

    #[test]
    fn r_gate_circuit_matches_matrix() {
        let u = build_unitary(&r_gate(0, 1), 2).unwrap();
        let (dev, fid) = phase_aligned_deviation(&u, &r_gate_matrix());
        assert!(dev < 1e-10, "{dev}");
        assert!((fid - 1.0).abs() < 1e-10);
    }

    #[test]
    fn r_conjugation_reduces_three_qubit_rotation() {
        // R on (0,1) maps exp(i a XXX) to exp(i a IXX)
        let r3 = r_gate_matrix().kronecker(&DMatrix::<C64>::identity(2, 2));
        let lhs = &r3 * rotation_matrix(&p("XXX"), 0.37) * r3.adjoint();
        let rhs = rotation_matrix(&p("IXX"), 0.37);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn single_qubit_rotations() {
        for l in ["X", "Y", "Z"] {
            let gl = decompose_rotation(&p(l), 0.8).unwrap();
            assert_eq!(gate_count(&gl), (1, 0));
            assert!(deviation(l, 0.8) < 1e-12);
        }
        assert!(deviation("IIZI", -1.3) < 1e-12);
    }

    #[test]
    fn zz_rotation() {
        assert!(deviation("ZZ", 0.3) < 1e-10);
        let gl = decompose_rotation(&p("ZZ"), 0.3).unwrap();
        assert_eq!(gate_count(&gl), (4, 1));
    }

    #[test]
    fn weight_six_string() {
        assert!(deviation("XYZZYX", 0.71) < 1e-9);
        let (_, two) = gate_count(&decompose_rotation(&p("XYZZYX"), 0.71).unwrap());
        assert_eq!(two, 2 * 4 + 1);
        assert!(two <= 2 * 6);
    }

    #[test]
    fn strings_with_identity_gaps() {
        for l in ["XIIY", "ZIXIZ", "IYIIIX", "YIZIIIXI"] {
            assert!(deviation(l, -0.45) < 1e-9, "{l}");
        }
    }

    #[test]
    fn two_qubit_count_follows_ladder() {
        let mut prev = 0;
        for m in 2..=8 {
            let label: String = "X".repeat(m);
            let (_, two) = gate_count(&decompose_rotation(&p(&label), 0.2).unwrap());
            assert_eq!(two, 2 * (m - 2) + 1);
            assert!(two >= prev);
            prev = two;
        }
    }

    #[test]
    fn identity_rejected_and_empty_counts() {
        assert!(decompose_rotation(&p("III"), 0.1).is_err());
        assert_eq!(gate_count(&GateList::default()), (0, 0));
        let u = build_unitary(&GateList::default(), 2).unwrap();
        assert_eq!(u, DMatrix::identity(4, 4));
        assert!(build_unitary(&GateList::default(), 9).is_err());
    }

    #[test]
    fn fusion_preserves_unitary() {
        for l in ["XYZZYX", "ZIXIZ", "YY", "XXXXX"] {
            let q = p(l);
            let gl = decompose_rotation(&q, 0.37).unwrap();
            let fused = fuse_single_qubit(&gl);
            assert!(fused.len() < gl.len() || q.weight() < 3, "{l}");
            assert_eq!(gate_count(&fused).1, gate_count(&gl).1);
            let dev = phase_aligned_deviation(&build_unitary(&fused, q.n()).unwrap(), &rotation_matrix(&q, 0.37)).0;
            assert!(dev < 1e-9, "{l} {dev}");
        }
        let h = Gate::U3 { qubit: 0, theta: FRAC_PI_2, phi: 0.0, lambda: PI };
        assert!(fuse_single_qubit(&GateList { gates: vec![h, h] }).is_empty());
    }

    #[test]
    fn cnot_is_permutation() {
        let gl = GateList { gates: vec![Gate::Cnot { control: 0, target: 1 }] };
        let u = build_unitary(&gl, 2).unwrap();
        let one = C64::new(1.0, 0.0);
        assert_eq!(u[(0, 0)], one);
        assert_eq!(u[(1, 1)], one);
        assert_eq!(u[(3, 2)], one);
        assert_eq!(u[(2, 3)], one);
        assert_eq!(u[(2, 2)], C64::new(0.0, 0.0));
    }

    #[test]
    fn u3_angles_round_trip() {
        for &(t, ph, la) in &[(0.3, 1.1, -0.4), (PI, 0.0, 0.7), (0.0, 0.0, 1.9), (2.0, -2.5, 3.0)] {
            let m = u3_matrix(t, ph, la);
            let (a, b, c) = u3_angles(&m);
            let back = u3_matrix(a, b, c);
            let to_mat = |m: &[[C64; 2]; 2]| DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]);
            assert!(phase_aligned_deviation(&to_mat(&back), &to_mat(&m)).0 < 1e-12);
        }
    }
}
