//! Dense statevector simulation.
//!
//! Amplitudes are stored flat with qubit 0 as the least-significant bit of the
//! basis index. Rotation conventions:
//!
//! * `RY(θ) = exp(+iθY/2)`, so `RY(θ)|0⟩ = cos(θ/2)|0⟩ − sin(θ/2)|1⟩`. This is the
//!   opposite of the more common `exp(−iθY/2)` and flips the sign of `⟨X⟩`.
//! * `RX(θ) = exp(−iθX/2)`
//! * `RZZ(θ) = exp(−iθ Z⊗Z / 2)`
//! * `CZ` negates the `|11⟩` component of its two wires.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        amps[0] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    /// `|+⟩^{⊗n}`: every amplitude equals `2^{-n/2}`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let a = T::one() / T::from_usize_lossy(dim).sqrt();
        Ok(Self {
            n_qubits,
            amps: vec![Complex::new(a, T::zero()); dim],
        })
    }

    /// Builds a state from raw amplitudes and rescales it to unit norm.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Data(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Data("state has zero or non-finite norm".into()));
        }
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    /// Builds a state from amplitudes that are already normalised, without rescaling.
    pub fn from_normalized(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Data(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_global_phase(mut self, phi: T) -> Self {
        let phase = Complex::from_polar(T::one(), phi);
        for a in &mut self.amps {
            *a = *a * phase;
        }
        self
    }

    fn apply_in_place(&mut self, gate: &GateOp<T>, angle: T) {
        let half = angle / T::lit(2.0);
        let (s, c) = half.sin_cos();
        match (gate.kind, gate.wires) {
            (GateKind::Ry, Wires::One(q)) => self.apply_single(q, |a0, a1| {
                (a0 * c + a1 * s, a1 * c - a0 * s)
            }),
            (GateKind::Rx, Wires::One(q)) => {
                let mis = Complex::new(T::zero(), -s);
                self.apply_single(q, |a0, a1| (a0 * c + a1 * mis, a0 * mis + a1 * c))
            }
            (GateKind::Rzz, Wires::Two(p, q)) => {
                let even = Complex::new(c, -s);
                let odd = Complex::new(c, s);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    let parity = ((i >> p) ^ (i >> q)) & 1;
                    *a = *a * if parity == 0 { even } else { odd };
                }
            }
            (GateKind::Cz, Wires::Two(p, q)) => {
                let mask = (1usize << p) | (1usize << q);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            _ => unreachable!("gate arity validated at construction"),
        }
    }

    #[inline]
    fn apply_single<F>(&mut self, q: usize, f: F)
    where
        F: Fn(Complex<T>, Complex<T>) -> (Complex<T>, Complex<T>),
    {
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 | stride;
                let (b0, b1) = f(self.amps[i0], self.amps[i1]);
                self.amps[i0] = b0;
                self.amps[i1] = b1;
            }
            base += 2 * stride;
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::QubitCount(n))
    }
}

pub fn zero_state<T: Real>(n_qubits: usize) -> Result<StateVector<T>> {
    StateVector::zero(n_qubits)
}

pub fn plus_state<T: Real>(n_qubits: usize) -> Result<StateVector<T>> {
    StateVector::plus(n_qubits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Ry,
    Rx,
    Rzz,
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wires {
    One(usize),
    Two(usize, usize),
}

impl Wires {
    fn max(&self) -> usize {
        match *self {
            Wires::One(q) => q,
            Wires::Two(p, q) => p.max(q),
        }
    }
}

/// Where a rotation gate takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource<T> {
    /// Gate has no angle (CZ).
    None,
    Fixed(T),
    /// Index into the trainable parameter vector θ.
    Param(usize),
    /// Index into the classical input vector x.
    Feature(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp<T> {
    kind: GateKind,
    wires: Wires,
    angle: AngleSource<T>,
}

impl<T: Real> GateOp<T> {
    pub fn new(kind: GateKind, wires: Wires, angle: AngleSource<T>) -> Result<Self> {
        match (kind, wires) {
            (GateKind::Ry | GateKind::Rx, Wires::One(_)) => {}
            (GateKind::Rzz | GateKind::Cz, Wires::Two(p, q)) => {
                if p == q {
                    return Err(Error::DuplicateWire(p));
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "{kind:?} does not act on {wires:?}"
                )))
            }
        }
        let has_angle = !matches!(angle, AngleSource::None);
        if (kind == GateKind::Cz) == has_angle {
            return Err(Error::Config(format!(
                "{kind:?} needs {} angle source",
                if kind == GateKind::Cz { "no" } else { "exactly one" }
            )));
        }
        Ok(Self { kind, wires, angle })
    }

    pub fn ry(q: usize, angle: AngleSource<T>) -> Result<Self> {
        Self::new(GateKind::Ry, Wires::One(q), angle)
    }

    pub fn rx(q: usize, angle: AngleSource<T>) -> Result<Self> {
        Self::new(GateKind::Rx, Wires::One(q), angle)
    }

    pub fn rzz(p: usize, q: usize, angle: AngleSource<T>) -> Result<Self> {
        Self::new(GateKind::Rzz, Wires::Two(p, q), angle)
    }

    pub fn cz(p: usize, q: usize) -> Result<Self> {
        Self::new(GateKind::Cz, Wires::Two(p, q), AngleSource::None)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn wires(&self) -> Wires {
        self.wires
    }

    pub fn angle_source(&self) -> AngleSource<T> {
        self.angle
    }

    fn check_wires(&self, n_qubits: usize) -> Result<()> {
        let w = self.wires.max();
        if w >= n_qubits {
            return Err(Error::WireOutOfRange { wire: w, n_qubits });
        }
        Ok(())
    }

    #[inline]
    fn resolve(&self, theta: &[T], x: &[T]) -> T {
        match self.angle {
            AngleSource::None => T::zero(),
            AngleSource::Fixed(a) => a,
            AngleSource::Param(k) => theta[k],
            AngleSource::Feature(f) => x[f],
        }
    }
}

/// Applies one gate with an already-resolved angle. The angle is ignored for CZ.
pub fn apply_gate<T: Real>(
    state: &StateVector<T>,
    gate: &GateOp<T>,
    angle: T,
) -> Result<StateVector<T>> {
    gate.check_wires(state.n_qubits)?;
    let mut out = state.clone();
    out.apply_in_place(gate, angle);
    Ok(out)
}

/// Ordered gate list with angles drawn from fixed values, θ or x.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitProgram<T> {
    n_qubits: usize,
    ops: Vec<GateOp<T>>,
    n_params: usize,
    n_features: usize,
}

impl<T: Real> CircuitProgram<T> {
    pub fn new(n_qubits: usize, n_params: usize, n_features: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            ops: Vec::new(),
            n_params,
            n_features,
        })
    }

    pub fn push(&mut self, op: GateOp<T>) -> Result<()> {
        op.check_wires(self.n_qubits)?;
        match op.angle {
            AngleSource::Param(k) if k >= self.n_params => {
                return Err(Error::Config(format!(
                    "parameter index {k} >= n_params {}",
                    self.n_params
                )))
            }
            AngleSource::Feature(f) if f >= self.n_features => {
                return Err(Error::Config(format!(
                    "feature index {f} >= n_features {}",
                    self.n_features
                )))
            }
            _ => {}
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn ops(&self) -> &[GateOp<T>] {
        &self.ops
    }

    fn check_call(&self, theta: &[T], x: &[T], input: &StateVector<T>) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::Dimension {
                what: "theta",
                expected: self.n_params,
                got: theta.len(),
            });
        }
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                what: "input features",
                expected: self.n_features,
                got: x.len(),
            });
        }
        if input.n_qubits != self.n_qubits {
            return Err(Error::Dimension {
                what: "input state qubits",
                expected: self.n_qubits,
                got: input.n_qubits,
            });
        }
        Ok(())
    }
}

pub fn run_circuit<T: Real>(
    circuit: &CircuitProgram<T>,
    theta: &[T],
    x: &[T],
    input: &StateVector<T>,
) -> Result<StateVector<T>> {
    circuit.check_call(theta, x, input)?;
    let mut state = input.clone();
    for op in &circuit.ops {
        state.apply_in_place(op, op.resolve(theta, x));
    }
    Ok(state)
}

pub fn expectation_x<T: Real>(state: &StateVector<T>, qubit: usize) -> Result<T> {
    if qubit >= state.n_qubits {
        return Err(Error::WireOutOfRange {
            wire: qubit,
            n_qubits: state.n_qubits,
        });
    }
    Ok(expectation_x_unchecked(state, qubit))
}

fn expectation_x_unchecked<T: Real>(state: &StateVector<T>, qubit: usize) -> T {
    let stride = 1usize << qubit;
    let mut acc = T::zero();
    for (i0, a0) in state.amps.iter().enumerate() {
        if i0 & stride == 0 {
            let a1 = state.amps[i0 | stride];
            acc = acc + (a0.conj() * a1).re;
        }
    }
    acc + acc
}

/// Squared overlap `|⟨a|b⟩|²`.
pub fn fidelity<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::Dimension {
            what: "fidelity operand qubits",
            expected: a.n_qubits,
            got: b.n_qubits,
        });
    }
    Ok(overlap(a, b).norm_sqr())
}

/// Inner product `⟨a|b⟩`. Callers guarantee equal dimensions.
pub(crate) fn overlap<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Complex<T> {
    a.amps
        .iter()
        .zip(&b.amps)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
            acc + x.conj() * y
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Pauli X on the given qubit.
    X(usize),
}

impl Observable {
    pub fn expectation<T: Real>(&self, state: &StateVector<T>) -> Result<T> {
        match *self {
            Observable::X(q) => expectation_x(state, q),
        }
    }
}

/// Expectation values of `observables` at the circuit output.
pub fn measure<T: Real>(
    circuit: &CircuitProgram<T>,
    theta: &[T],
    x: &[T],
    input: &StateVector<T>,
    observables: &[Observable],
) -> Result<Vec<T>> {
    let out = run_circuit(circuit, theta, x, input)?;
    observables.iter().map(|o| o.expectation(&out)).collect()
}

/// Jacobian of observable expectations with respect to θ by the ±π/2 shift rule.
///
/// Returns `observables.len()` rows of `n_params` entries. A parameter feeding
/// several gates receives the sum of its per-occurrence shifts.
pub fn param_shift_jacobian<T: Real>(
    circuit: &CircuitProgram<T>,
    theta: &[T],
    x: &[T],
    input: &StateVector<T>,
    observables: &[Observable],
) -> Result<Vec<Vec<T>>> {
    circuit.check_call(theta, x, input)?;
    for o in observables {
        let Observable::X(q) = *o;
        if q >= circuit.n_qubits {
            return Err(Error::WireOutOfRange {
                wire: q,
                n_qubits: circuit.n_qubits,
            });
        }
    }
    let shift = T::FRAC_PI_2();
    let half = T::lit(0.5);
    let mut jac = vec![vec![T::zero(); circuit.n_params]; observables.len()];
    let mut prefix = input.clone();
    for (j, op) in circuit.ops.iter().enumerate() {
        let angle = op.resolve(theta, x);
        if let AngleSource::Param(k) = op.angle {
            let suffix = &circuit.ops[j + 1..];
            let eval = |a: T| {
                let mut s = prefix.clone();
                s.apply_in_place(op, a);
                for later in suffix {
                    s.apply_in_place(later, later.resolve(theta, x));
                }
                s
            };
            let plus = eval(angle + shift);
            let minus = eval(angle - shift);
            for (row, o) in jac.iter_mut().zip(observables) {
                let Observable::X(q) = *o;
                let d = expectation_x_unchecked(&plus, q) - expectation_x_unchecked(&minus, q);
                row[k] = row[k] + d * half;
            }
        }
        prefix.apply_in_place(op, angle);
    }
    Ok(jac)
}
