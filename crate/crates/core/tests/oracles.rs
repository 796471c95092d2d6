//! Ground energies checked against independent references.

use nalgebra::{DMatrix, SymmetricEigen};

use mqite::dense::hamiltonian_matrix;
use mqite::ite::{exact_ground, run_ite};
use mqite::problems::{maxcut, nuclear_pshell, tfim, validation_hamiltonian, ProblemSpec};
use mqite::Prep;

/// Open-chain TFIM `-J sum Z Z + h sum X`: after Jordan-Wigner the single-particle
/// energies are the singular values of the bidiagonal matrix with `h` on the
/// diagonal and `J` above it, and `E0 = -sum_k eps_k`.
fn free_fermion_ground(n: usize, j: f64, h: f64) -> f64 {
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = h;
        if i + 1 < n {
            b[(i, i + 1)] = j;
        }
    }
    -b.singular_values().sum()
}

#[test]
fn tfim_matches_free_fermions() {
    for n in [2, 4, 7, 10] {
        for (j, h) in [(1.0, 1.0), (1.0, 0.5), (0.7, 1.3)] {
            let e = exact_ground(&tfim(n, j, h).unwrap(), None).unwrap().energy;
            let ff = free_fermion_ground(n, j, h);
            assert!((e - ff).abs() < 1e-9, "n={n} J={j} h={h}: {e} vs {ff}");
        }
    }
}

#[test]
fn tfim_dense_consistency() {
    let h = tfim(6, 1.0, 1.0).unwrap();
    let dense = hamiltonian_matrix(&h);
    let real = DMatrix::from_fn(64, 64, |r, c| dense[(r, c)].re);
    let e = SymmetricEigen::new(real).eigenvalues.min();
    assert!((exact_ground(&h, None).unwrap().energy - e).abs() < 1e-10);
}

#[test]
fn maxcut_matches_brute_force_at_ten_qubits() {
    for seed in [0, 15, 31] {
        let (g, h) = maxcut(10, 3, 1.0, seed).unwrap();
        let e = exact_ground(&h, None).unwrap().energy;
        assert!((e - g.brute_force_minimum()).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn validation_ground_energy() {
    let g = exact_ground(&validation_hamiltonian(), None).unwrap();
    assert!((g.energy - (-3.118)).abs() < 5e-4, "{}", g.energy);
}

/// Dense diagonalization of the rows and columns of `H` in the given basis set.
fn dense_sector_ground(h: &mqite::Hamiltonian, sector: &[u64]) -> f64 {
    let full = hamiltonian_matrix(h);
    let d = sector.len();
    let sub = DMatrix::from_fn(d, d, |r, c| full[(sector[r] as usize, sector[c] as usize)]);
    SymmetricEigen::new(sub).eigenvalues.min()
}

#[test]
fn nuclear_sectors_match_dense_restriction() {
    let (h, presets) = nuclear_pshell().unwrap();
    for occ in [presets.m0.clone(), presets.m2.clone()] {
        let p = ProblemSpec::NuclearPshell { occupied: Some(occ.clone()) }.build().unwrap();
        let sector: Vec<u64> = p.sector.clone().unwrap().into_iter().collect();
        // two neutrons: every reachable configuration keeps two occupied orbitals
        assert!(sector.iter().all(|b| b.count_ones() == 2), "{occ:?}");
        let e = p.exact_ground().unwrap().energy;
        assert!((e - dense_sector_ground(&h, &sector)).abs() < 1e-9, "{occ:?}");
    }
}

#[test]
fn ite_converges_to_trotter_floor() {
    let h = tfim(6, 1.0, 1.0).unwrap();
    let e0 = exact_ground(&h, None).unwrap().energy;
    let gap = |delta: f64| run_ite(&h, delta, 6.0, &Prep::Zero, false).unwrap().final_energy() - e0;
    let (a, b) = (gap(0.1), gap(0.05));
    assert!(a > 0.0 && b > 0.0 && b < a, "{a} {b}");
    assert!(a < 0.1 * e0.abs());
}

#[test]
fn maxcut_ite_is_monotone() {
    let (_, h) = maxcut(8, 3, 1.0, 2).unwrap();
    let t = run_ite(&h, 0.1, 2.0, &Prep::Zero, false).unwrap();
    for w in t.steps.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-12);
    }
}
