//! Layered RY/CZ variational circuit and the scaled two-observable readout.
//!
//! One layer is `U2 · U1`, each block spending `2n` parameters:
//!
//! ```text
//! U1: RY on every qubit, CZ(0,1) CZ(2,3) ..., RY on every qubit
//! U2: RY on every qubit, CZ(1,2) CZ(3,0) ..., RY on every qubit
//! ```
//!
//! With four qubits that is 16 parameters per layer, layer `k` owning
//! `θ[16k..16k+16]` (U1 first). Classical inputs are loaded by a leading
//! `RY(x_q)` on each qubit; quantum inputs skip that layer.

use crate::error::{Error, Result};
use crate::quantum::{
    measure, param_shift_jacobian, run_circuit, zero_state, AngleSource, CircuitProgram, GateOp,
    Observable, StateVector,
};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzSpec<T> {
    pub n_qubits: usize,
    pub depth: usize,
    pub has_input_layer: bool,
    /// 0-based qubits whose `⟨X⟩` form the two output coordinates.
    pub observable_qubits: (usize, usize),
    pub scale_a: T,
}

impl<T: Real> AnsatzSpec<T> {
    /// Four qubits readout on qubits 1 and 2 (`X_2`, `X_3` in 1-based labels).
    pub fn new(depth: usize, has_input_layer: bool, scale_a: T) -> Self {
        Self {
            n_qubits: 4,
            depth,
            has_input_layer,
            observable_qubits: (1, 2),
            scale_a,
        }
    }

    pub fn params_per_layer(&self) -> usize {
        4 * self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.params_per_layer() * self.depth
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 || self.n_qubits % 2 != 0 {
            return Err(Error::Config(format!(
                "ansatz needs an even qubit count >= 2, got {}",
                self.n_qubits
            )));
        }
        if self.depth == 0 {
            return Err(Error::Config("circuit depth must be at least 1".into()));
        }
        let (a, b) = self.observable_qubits;
        if a == b || a >= self.n_qubits || b >= self.n_qubits {
            return Err(Error::Config(format!(
                "observable qubits ({a}, {b}) must be distinct and < {}",
                self.n_qubits
            )));
        }
        if !(self.scale_a > T::zero()) || !self.scale_a.is_finite() {
            return Err(Error::Config(format!(
                "scale a must be positive, got {}",
                self.scale_a
            )));
        }
        Ok(())
    }

    fn observables(&self) -> [Observable; 2] {
        [
            Observable::X(self.observable_qubits.0),
            Observable::X(self.observable_qubits.1),
        ]
    }
}

/// `RY(x_q)` on each qubit, angles taken from the feature vector.
pub fn build_input_layer<T: Real>(n_qubits: usize, n_features: usize) -> Result<CircuitProgram<T>> {
    if n_features != n_qubits {
        return Err(Error::Dimension {
            what: "input features vs qubits",
            expected: n_qubits,
            got: n_features,
        });
    }
    let mut c = CircuitProgram::new(n_qubits, 0, n_features)?;
    push_input_layer(&mut c)?;
    Ok(c)
}

fn push_input_layer<T: Real>(c: &mut CircuitProgram<T>) -> Result<()> {
    for q in 0..c.n_qubits() {
        c.push(GateOp::ry(q, AngleSource::Feature(q))?)?;
    }
    Ok(())
}

/// Quantum feature map `U_in(x)|0…0⟩`.
pub fn feature_map_state<T: Real>(x: &[T]) -> Result<StateVector<T>> {
    let c = build_input_layer(x.len(), x.len())?;
    run_circuit(&c, &[], x, &zero_state(x.len())?)
}

pub fn build_ansatz<T: Real>(spec: &AnsatzSpec<T>) -> Result<CircuitProgram<T>> {
    spec.validate()?;
    let n = spec.n_qubits;
    let n_features = if spec.has_input_layer { n } else { 0 };
    let mut c = CircuitProgram::new(n, spec.n_params(), n_features)?;
    if spec.has_input_layer {
        push_input_layer(&mut c)?;
    }
    let mut next = 0usize;
    let mut ry_layer = |c: &mut CircuitProgram<T>| -> Result<()> {
        for q in 0..n {
            c.push(GateOp::ry(q, AngleSource::Param(next))?)?;
            next += 1;
        }
        Ok(())
    };
    for _ in 0..spec.depth {
        // U1
        ry_layer(&mut c)?;
        for q in (0..n).step_by(2) {
            c.push(GateOp::cz(q, q + 1)?)?;
        }
        ry_layer(&mut c)?;
        // U2
        ry_layer(&mut c)?;
        for q in (1..n).step_by(2) {
            c.push(GateOp::cz(q, (q + 1) % n)?)?;
        }
        ry_layer(&mut c)?;
    }
    Ok(c)
}

/// Input to the embedding map.
#[derive(Debug, Clone, Copy)]
pub enum EmbedInput<'a, T> {
    Features(&'a [T]),
    State(&'a StateVector<T>),
}

/// An ansatz spec together with its compiled circuit.
#[derive(Debug, Clone)]
pub struct Ansatz<T> {
    spec: AnsatzSpec<T>,
    circuit: CircuitProgram<T>,
    zero: StateVector<T>,
}

impl<T: Real> Ansatz<T> {
    pub fn new(spec: AnsatzSpec<T>) -> Result<Self> {
        let circuit = build_ansatz(&spec)?;
        let zero = zero_state(spec.n_qubits)?;
        Ok(Self {
            spec,
            circuit,
            zero,
        })
    }

    pub fn spec(&self) -> &AnsatzSpec<T> {
        &self.spec
    }

    pub fn circuit(&self) -> &CircuitProgram<T> {
        &self.circuit
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    fn resolve<'a>(&'a self, input: EmbedInput<'a, T>) -> Result<(&'a [T], &'a StateVector<T>)> {
        match (input, self.spec.has_input_layer) {
            (EmbedInput::Features(x), true) => Ok((x, &self.zero)),
            (EmbedInput::State(s), false) => Ok((&[], s)),
            (EmbedInput::Features(_), false) => Err(Error::Config(
                "classical input given to an ansatz without input layer".into(),
            )),
            (EmbedInput::State(_), true) => Err(Error::Config(
                "quantum input given to an ansatz with an input layer".into(),
            )),
        }
    }

    /// `a · (⟨X_p⟩, ⟨X_q⟩)` at the circuit output.
    pub fn embed_point(&self, theta: &[T], input: EmbedInput<'_, T>) -> Result<[T; 2]> {
        let (x, state) = self.resolve(input)?;
        let y = measure(&self.circuit, theta, x, state, &self.spec.observables())?;
        Ok([self.spec.scale_a * y[0], self.spec.scale_a * y[1]])
    }

    /// `2 × n_params` Jacobian of [`Self::embed_point`], scale factor included.
    pub fn embed_jacobian(&self, theta: &[T], input: EmbedInput<'_, T>) -> Result<[Vec<T>; 2]> {
        let (x, state) = self.resolve(input)?;
        let jac = param_shift_jacobian(&self.circuit, theta, x, state, &self.spec.observables())?;
        let a = self.spec.scale_a;
        let mut rows = jac.into_iter().map(|r| r.into_iter().map(|v| a * v).collect());
        Ok([rows.next().unwrap(), rows.next().unwrap()])
    }
}

pub fn embed_point<T: Real>(
    spec: &AnsatzSpec<T>,
    theta: &[T],
    input: EmbedInput<'_, T>,
) -> Result<[T; 2]> {
    Ansatz::new(spec.clone())?.embed_point(theta, input)
}

pub fn embed_jacobian<T: Real>(
    spec: &AnsatzSpec<T>,
    theta: &[T],
    input: EmbedInput<'_, T>,
) -> Result<[Vec<T>; 2]> {
    Ansatz::new(spec.clone())?.embed_jacobian(theta, input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{fidelity, plus_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn parameter_counts() {
        let c4 = build_ansatz(&AnsatzSpec::<f64>::new(4, true, 1.0)).unwrap();
        assert_eq!(c4.n_params(), 64);
        let c8 = build_ansatz(&AnsatzSpec::<f64>::new(8, false, 1.0)).unwrap();
        assert_eq!(c8.n_params(), 128);
        // every index consumed by exactly one gate
        let mut seen = vec![0usize; 128];
        for op in c8.ops() {
            if let AngleSource::Param(k) = op.angle_source() {
                seen[k] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn validation() {
        assert!(build_ansatz(&AnsatzSpec::<f64>::new(0, true, 1.0)).is_err());
        assert!(build_ansatz(&AnsatzSpec::<f64>::new(1, true, 0.0)).is_err());
        let mut s = AnsatzSpec::<f64>::new(1, true, 1.0);
        s.observable_qubits = (2, 2);
        assert!(build_ansatz(&s).is_err());
        s.observable_qubits = (1, 4);
        assert!(build_ansatz(&s).is_err());
    }

    #[test]
    fn input_layer_examples() {
        let c = build_input_layer::<f64>(4, 4).unwrap();
        let z = zero_state::<f64>(4).unwrap();
        assert_eq!(run_circuit(&c, &[], &[0.0; 4], &z).unwrap(), z);
        let out = run_circuit(&c, &[], &[PI, 0.0, 0.0, 0.0], &z).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[1].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert!(build_input_layer::<f64>(4, 3).is_err());
    }

    #[test]
    fn zero_theta_keeps_zero_state() {
        let spec = AnsatzSpec::<f64>::new(2, false, 1.0);
        let c = build_ansatz(&spec).unwrap();
        let z = zero_state(4).unwrap();
        let out = run_circuit(&c, &vec![0.0; 32], &[], &z).unwrap();
        assert_abs_diff_eq!(fidelity(&out, &z).unwrap(), 1.0, epsilon = 1e-14);
    }

    /// Independent 16-amplitude evaluation of the L=1 circuit on |+⟩^⊗4 at θ = 0.
    /// With θ = 0 only the CZ gates act: CZ(0,1) CZ(2,3) then CZ(1,2) CZ(3,0).
    fn plus_through_czs_x_expectation(q: usize) -> f64 {
        let mut amps = [0.25_f64; 16];
        for (i, a) in amps.iter_mut().enumerate() {
            let bit = |k: usize| (i >> k) & 1;
            let parity = bit(0) * bit(1) + bit(2) * bit(3) + bit(1) * bit(2) + bit(3) * bit(0);
            if parity % 2 == 1 {
                *a = -*a;
            }
        }
        (0..16)
            .filter(|i| i & (1 << q) == 0)
            .map(|i| 2.0 * amps[i] * amps[i | (1 << q)])
            .sum()
    }

    #[test]
    fn embed_plus_state_matches_oracle() {
        let spec = AnsatzSpec::<f64>::new(1, false, 1.0);
        let plus = plus_state(4).unwrap();
        let y = embed_point(&spec, &[0.0; 16], EmbedInput::State(&plus)).unwrap();
        assert_abs_diff_eq!(y[0], plus_through_czs_x_expectation(1), epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], plus_through_czs_x_expectation(2), epsilon = 1e-14);
        // each X_q anticommutes with two of the CZs, so it loses its expectation
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn scale_is_linear() {
        let theta: Vec<f64> = (0..16).map(|k| 0.1 * k as f64 - 0.7).collect();
        let x = [0.2, -0.4, 0.9, 0.1];
        let a1 = Ansatz::new(AnsatzSpec::new(1, true, 1.0)).unwrap();
        let a10 = Ansatz::new(AnsatzSpec::new(1, true, 10.0)).unwrap();
        let y1 = a1.embed_point(&theta, EmbedInput::Features(&x)).unwrap();
        let y10 = a10.embed_point(&theta, EmbedInput::Features(&x)).unwrap();
        let j1 = a1.embed_jacobian(&theta, EmbedInput::Features(&x)).unwrap();
        let j10 = a10.embed_jacobian(&theta, EmbedInput::Features(&x)).unwrap();
        for d in 0..2 {
            assert_abs_diff_eq!(y10[d], 10.0 * y1[d], epsilon = 1e-13);
            for k in 0..16 {
                assert_abs_diff_eq!(j10[d][k], 10.0 * j1[d][k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn input_kind_mismatch() {
        let a = Ansatz::new(AnsatzSpec::<f64>::new(1, true, 1.0)).unwrap();
        let s = plus_state(4).unwrap();
        assert!(a.embed_point(&[0.0; 16], EmbedInput::State(&s)).is_err());
        let q = Ansatz::new(AnsatzSpec::<f64>::new(1, false, 1.0)).unwrap();
        assert!(q.embed_point(&[0.0; 16], EmbedInput::Features(&[0.0; 4])).is_err());
    }
}
