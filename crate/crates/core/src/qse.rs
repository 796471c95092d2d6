//! Subspace expansion over the states visited by an MQITE run.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mqite::RunRecord;
use crate::pauli::Hamiltonian;
use crate::simulator::StateVector;

pub const DEFAULT_SVD_CUT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SubspaceProblem {
    /// `C_ab = <psi_a|psi_b>`.
    pub overlap: DMatrix<C64>,
    /// `H_ab = <psi_a|H|psi_b>`.
    pub heff: DMatrix<C64>,
    /// Imaginary time of each snapshot.
    pub labels: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QseResult {
    pub energy: f64,
    pub rank: usize,
    pub dimension: usize,
    pub labels: Vec<f64>,
    /// Expansion coefficients over the snapshots (real and imaginary parts).
    pub coefficients: Vec<[f64; 2]>,
}

impl SubspaceProblem {
    pub fn from_states(states: &[StateVector], labels: Vec<f64>, h: &Hamiltonian) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("subspace needs at least one snapshot".into()));
        }
        let hs = states.iter().map(|s| s.apply_hamiltonian(h)).collect::<Result<Vec<_>>>()?;
        let d = states.len();
        let mut overlap = DMatrix::zeros(d, d);
        let mut heff = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let c = states[a].inner(&states[b])?;
                let e = states[a].inner(&hs[b])?;
                overlap[(a, b)] = c;
                overlap[(b, a)] = c.conj();
                heff[(a, b)] = e;
                heff[(b, a)] = e.conj();
            }
            heff[(a, a)].im = 0.0;
            overlap[(a, a)].im = 0.0;
        }
        Ok(SubspaceProblem { overlap, heff, labels })
    }
}

/// Snapshots every `stride` sweeps (always including the last), replayed from
/// the suffixes of the final circuit.
pub fn build_subspace(record: &RunRecord, h: &Hamiltonian, stride: usize) -> Result<SubspaceProblem> {
    if record.sweeps.is_empty() {
        return Err(Error::InvalidArgument("run record has no sweeps".into()));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let last = record.sweeps.len() - 1;
    let mut picks: Vec<usize> = (0..=last).step_by(stride).collect();
    if picks.last() != Some(&last) {
        picks.push(last);
    }
    let states = picks.iter().map(|&s| record.circuit_at(s)?.state()).collect::<Result<Vec<_>>>()?;
    let labels = picks.iter().map(|&s| record.sweeps[s].tau).collect();
    SubspaceProblem::from_states(&states, labels, h)
}

/// Lowest generalized eigenvalue of `(H_eff, C)` after discarding overlap
/// eigenvectors with eigenvalue below `svd_cut`.
pub fn solve_gev(p: &SubspaceProblem, svd_cut: f64) -> Result<QseResult> {
    let d = p.overlap.nrows();
    let eig = SymmetricEigen::new(p.overlap.clone());
    let keep: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] >= svd_cut).collect();
    if keep.is_empty() {
        return Err(Error::Numerical(format!("every overlap eigenvalue is below the cut {svd_cut:e}")));
    }
    // columns v_i / sqrt(lambda_i) span the retained subspace orthonormally
    let mut basis = DMatrix::<C64>::zeros(d, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = C64::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0);
        basis.set_column(c, &(eig.eigenvectors.column(i) * s));
    }
    let mut reduced = basis.adjoint() * &p.heff * &basis;
    reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    let red = SymmetricEigen::new(reduced);
    let (imin, energy) = red
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one retained direction");
    let coeffs = &basis * red.eigenvectors.column(imin);
    Ok(QseResult {
        energy,
        rank: keep.len(),
        dimension: d,
        labels: p.labels.clone(),
        coefficients: coeffs.iter().map(|c| [c.re, c.im]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ite::exact_ground;
    use crate::simulator::{seeded_rng, Prep};
    use rand::Rng as _;

    fn h() -> Hamiltonian {
        Hamiltonian::from_labels(&[(0.6, "XYI"), (-0.9, "ZZI"), (0.4, "IXX"), (0.5, "YIY")]).unwrap()
    }

    fn random_state(rng: &mut crate::simulator::Rng) -> StateVector {
        let amps = (0..8).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let mut s = StateVector::from_amplitudes(3, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn single_snapshot_is_expectation() {
        let s = StateVector::init(3, &Prep::GhzPlus).unwrap();
        let p = SubspaceProblem::from_states(std::slice::from_ref(&s), vec![0.0], &h()).unwrap();
        assert!((p.overlap[(0, 0)].re - 1.0).abs() < 1e-12);
        let r = solve_gev(&p, DEFAULT_SVD_CUT).unwrap();
        assert!((r.energy - s.expectation(&h()).unwrap()).abs() < 1e-12);
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn duplicates_are_rank_one() {
        let s = StateVector::init(3, &Prep::GhzMinus).unwrap();
        let p = SubspaceProblem::from_states(&[s.clone(), s.clone()], vec![0.0, 1.0], &h()).unwrap();
        let r = solve_gev(&p, DEFAULT_SVD_CUT).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.energy - s.expectation(&h()).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn subspace_containing_ground_is_exact() {
        let g = exact_ground(&h(), None).unwrap();
        let mut rng = seeded_rng(1, 0);
        let states = vec![random_state(&mut rng), g.vector.clone(), random_state(&mut rng)];
        let p = SubspaceProblem::from_states(&states, vec![0.0, 1.0, 2.0], &h()).unwrap();
        let r = solve_gev(&p, DEFAULT_SVD_CUT).unwrap();
        assert!((r.energy - g.energy).abs() < 1e-9);
    }

    #[test]
    fn variational_monotone_and_order_invariant() {
        let g = exact_ground(&h(), None).unwrap();
        let mut rng = seeded_rng(2, 0);
        let states: Vec<StateVector> = (0..5).map(|_| random_state(&mut rng)).collect();
        let mut prev = f64::INFINITY;
        for k in 1..=states.len() {
            let p = SubspaceProblem::from_states(&states[..k], (0..k).map(|i| i as f64).collect(), &h()).unwrap();
            let e = solve_gev(&p, DEFAULT_SVD_CUT).unwrap().energy;
            assert!(e >= g.energy - 1e-9);
            assert!(e <= prev + 1e-9);
            prev = e;
        }
        let mut rev = states.clone();
        rev.reverse();
        let p = SubspaceProblem::from_states(&rev, vec![0.0; 5], &h()).unwrap();
        assert!((solve_gev(&p, DEFAULT_SVD_CUT).unwrap().energy - prev).abs() < 1e-9);
    }

    #[test]
    fn all_below_cut_is_an_error() {
        let s = StateVector::zero(3).unwrap();
        let p = SubspaceProblem::from_states(&[s], vec![0.0], &h()).unwrap();
        assert!(solve_gev(&p, 2.0).is_err());
        assert!(SubspaceProblem::from_states(&[], vec![], &h()).is_err());
    }
}
