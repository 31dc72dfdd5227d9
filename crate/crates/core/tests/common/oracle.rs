//! Dense time-ordered propagator for small transverse-field Ising systems,
//! built from full matrix exponentials. Independent of the gate-based path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qtsne::datagen::IsingInstance;
use qtsne::StateVector64;

fn c(r: f64) -> Complex64 {
    Complex64::new(r, 0.0)
}

/// `op` acting on `site` of an `n`-site register, qubit 0 least significant.
fn embed(op: &DMatrix<Complex64>, site: usize, n: usize) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut out = DMatrix::<Complex64>::identity(1, 1);
    for q in (0..n).rev() {
        out = out.kronecker(if q == site { op } else { &id });
    }
    out
}

pub fn hamiltonian(inst: &IsingInstance, t: f64, tau: f64) -> DMatrix<Complex64> {
    let n = inst.n_qubits;
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let dim = 1 << n;
    let s = t / tau;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (q, &hq) in inst.h.iter().enumerate() {
        h += embed(&x, q, n) * c((1.0 - s) * hq);
    }
    for &((i, j), jij) in &inst.couplings {
        h += embed(&z, i, n) * embed(&z, j, n) * c(s * jij);
    }
    h
}

/// Midpoint-rule product of `substeps` exact short-time propagators from `|+⟩^{⊗n}`.
pub fn evolve_dense(inst: &IsingInstance, tau: f64, t_end: f64, substeps: usize) -> StateVector64 {
    let dim = 1usize << inst.n_qubits;
    let mut psi = DVector::from_element(dim, c((dim as f64).sqrt().recip()));
    let d = t_end / substeps as f64;
    for m in 0..substeps {
        let tm = (m as f64 + 0.5) * d;
        let u = (hamiltonian(inst, tm, tau) * Complex64::new(0.0, -d)).exp();
        psi = u * psi;
    }
    StateVector64::from_normalized(psi.iter().copied().collect()).unwrap()
}
