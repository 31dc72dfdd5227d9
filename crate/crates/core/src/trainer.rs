//! Parametric t-SNE with the circuit as the embedding map, plus the plain
//! (non-parametric) t-SNE baseline.
//!
//! Training is full-batch with a fixed epoch budget. Every epoch takes one
//! SAM step, i.e. two full cost-gradient evaluations.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::ansatz::{Ansatz, AnsatzSpec, EmbedInput};
use crate::error::{Error, Result};
use crate::optimizer::{sam_adam_step, AdamConfig, AdamState, SamConfig};
use crate::quantum::{expectation_x, StateVector};
use crate::scalar::Real;
use crate::similarity::{
    calibrated_conditionals, euclidean_d2, grad_kl_wrt_y, infidelity_d2, joint_p, kl_cost,
    neg_log_fidelity_d2, student_t_q, PerplexityConfig, SimilarityMatrix,
};

/// How high-dimensional similarities are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Euclidean distance between classical feature vectors.
    Euclidean,
    /// Euclidean distance between per-qubit `⟨X⟩` vectors of quantum inputs.
    Observables,
    /// `1 − |⟨ψ_i|ψ_j⟩|²` between quantum inputs.
    Infidelity,
    /// `(−log|⟨ψ_i|ψ_j⟩|)²` between quantum inputs.
    NegLogFidelity,
}

impl Backend {
    pub fn needs_quantum_input(self) -> bool {
        !matches!(self, Backend::Euclidean)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Euclidean => "euclidean",
            Backend::Observables => "observables",
            Backend::Infidelity => "infidelity",
            Backend::NegLogFidelity => "neg-log-fidelity",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "euclidean" => Ok(Backend::Euclidean),
            "observables" => Ok(Backend::Observables),
            "infidelity" => Ok(Backend::Infidelity),
            "neg-log-fidelity" => Ok(Backend::NegLogFidelity),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected euclidean, observables, infidelity or neg-log-fidelity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Inputs<T> {
    Classical(Vec<Vec<T>>),
    Quantum(Vec<StateVector<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Inputs<T>,
    pub labels: Vec<String>,
}

impl<T: Real> Dataset<T> {
    pub fn classical(features: Vec<Vec<T>>, labels: Vec<String>) -> Self {
        Self {
            inputs: Inputs::Classical(features),
            labels,
        }
    }

    pub fn quantum(states: Vec<StateVector<T>>, labels: Vec<String>) -> Self {
        Self {
            inputs: Inputs::Quantum(states),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        match &self.inputs {
            Inputs::Classical(x) => x.len(),
            Inputs::Quantum(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn input(&self, i: usize) -> EmbedInput<'_, T> {
        match &self.inputs {
            Inputs::Classical(x) => EmbedInput::Features(&x[i]),
            Inputs::Quantum(s) => EmbedInput::State(&s[i]),
        }
    }

    fn n_qubits(&self) -> usize {
        match &self.inputs {
            Inputs::Classical(x) => x.first().map_or(0, Vec::len),
            Inputs::Quantum(s) => s.first().map_or(0, StateVector::n_qubits),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub backend: Backend,
    pub perplexity: PerplexityConfig<T>,
    pub scale_a: T,
    pub depth: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig<T>,
    pub sam: SamConfig<T>,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            backend: Backend::Euclidean,
            perplexity: PerplexityConfig::default(),
            scale_a: T::one(),
            depth: 4,
            epochs: 300,
            seed: 0,
            adam: AdamConfig::default(),
            sam: SamConfig::default(),
        }
    }
}

impl<T: Real> RunConfig<T> {
    pub fn validate_for(&self, dataset: &Dataset<T>) -> Result<()> {
        self.perplexity.validate()?;
        self.sam.validate()?;
        if !(self.adam.lr > T::zero()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        match (&dataset.inputs, self.backend.needs_quantum_input()) {
            (Inputs::Classical(_), true) => Err(Error::Config(format!(
                "backend '{}' needs quantum-state input",
                self.backend
            ))),
            (Inputs::Quantum(_), false) => Err(Error::Config(
                "euclidean backend needs classical vector input".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn ansatz_spec(&self, dataset: &Dataset<T>) -> AnsatzSpec<T> {
        AnsatzSpec {
            n_qubits: dataset.n_qubits(),
            depth: self.depth,
            has_input_layer: matches!(dataset.inputs, Inputs::Classical(_)),
            observable_qubits: (1, 2),
            scale_a: self.scale_a,
        }
    }
}

/// Per-qubit `⟨X_k⟩` vectors of the given states.
pub fn states_to_feature_vectors<T: Real>(states: &[StateVector<T>]) -> Result<Vec<Vec<T>>> {
    let first = states.first().ok_or(Error::EmptyDataset)?;
    let n = first.n_qubits();
    states
        .iter()
        .map(|s| {
            if s.n_qubits() != n {
                return Err(Error::Dimension {
                    what: "state qubit count",
                    expected: n,
                    got: s.n_qubits(),
                });
            }
            (0..n).map(|q| expectation_x(s, q)).collect()
        })
        .collect()
}

/// Joint high-dimensional similarities for the configured backend.
pub fn compute_p<T: Real>(dataset: &Dataset<T>, config: &RunConfig<T>) -> Result<SimilarityMatrix<T>> {
    config.validate_for(dataset)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d2 = match (&dataset.inputs, config.backend) {
        (Inputs::Classical(x), Backend::Euclidean) => euclidean_d2(x)?,
        (Inputs::Quantum(s), Backend::Observables) => euclidean_d2(&states_to_feature_vectors(s)?)?,
        (Inputs::Quantum(s), Backend::Infidelity) => infidelity_d2(s)?,
        (Inputs::Quantum(s), Backend::NegLogFidelity) => neg_log_fidelity_d2(s)?,
        _ => unreachable!("validated above"),
    };
    joint_p(&calibrated_conditionals(&d2, &config.perplexity)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward<T> {
    pub points: Vec<[T; 2]>,
    pub q: SimilarityMatrix<T>,
    pub cost: T,
}

/// A dataset with its fixed P matrix and compiled ansatz.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    dataset: Dataset<T>,
    p: SimilarityMatrix<T>,
    ansatz: Ansatz<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(dataset: Dataset<T>, config: &RunConfig<T>) -> Result<Self> {
        let p = compute_p(&dataset, config)?;
        let ansatz = Ansatz::new(config.ansatz_spec(&dataset))?;
        Ok(Self { dataset, p, ansatz })
    }

    pub fn p(&self) -> &SimilarityMatrix<T> {
        &self.p
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.dataset
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    pub fn embed(&self, theta: &[T]) -> Result<Vec<[T; 2]>> {
        (0..self.dataset.len())
            .into_par_iter()
            .map(|i| self.ansatz.embed_point(theta, self.dataset.input(i)))
            .collect()
    }

    pub fn forward(&self, theta: &[T]) -> Result<Forward<T>> {
        let points = self.embed(theta)?;
        let q = student_t_q(&points);
        let cost = kl_cost(&self.p, &q)?;
        Ok(Forward { points, q, cost })
    }

    /// Cost and `∂C/∂θ = Σ_i (∂C/∂y_i)ᵀ J_i`.
    pub fn cost_gradient(&self, theta: &[T]) -> Result<(T, Vec<T>)> {
        let per_point: Vec<([T; 2], [Vec<T>; 2])> = (0..self.dataset.len())
            .into_par_iter()
            .map(|i| {
                let input = self.dataset.input(i);
                Ok((
                    self.ansatz.embed_point(theta, input)?,
                    self.ansatz.embed_jacobian(theta, input)?,
                ))
            })
            .collect::<Result<_>>()?;
        let points: Vec<[T; 2]> = per_point.iter().map(|(y, _)| *y).collect();
        let q = student_t_q(&points);
        let cost = kl_cost(&self.p, &q)?;
        let gy = grad_kl_wrt_y(&self.p, &q, &points)?;
        let mut grad = vec![T::zero(); theta.len()];
        for (g, (_, jac)) in gy.iter().zip(&per_point) {
            for (k, out) in grad.iter_mut().enumerate() {
                *out = *out + g[0] * jac[0][k] + g[1] * jac[1][k];
            }
        }
        Ok((cost, grad))
    }
}

pub fn forward<T: Real>(dataset: &Dataset<T>, theta: &[T], config: &RunConfig<T>) -> Result<Forward<T>> {
    Problem::new(dataset.clone(), config)?.forward(theta)
}

pub fn cost_gradient<T: Real>(dataset: &Dataset<T>, theta: &[T], config: &RunConfig<T>) -> Result<Vec<T>> {
    Ok(Problem::new(dataset.clone(), config)?.cost_gradient(theta)?.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRun<T> {
    pub config: RunConfig<T>,
    /// `epochs + 1` rows, starting with the initialisation.
    pub theta_trajectory: Vec<Vec<T>>,
    /// Cost at every trajectory row.
    pub cost_history: Vec<T>,
    pub final_points: Vec<[T; 2]>,
    pub labels: Vec<String>,
}

fn check_finite<T: Real>(epoch: usize, c: T) -> Result<T> {
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::NonFiniteCost {
            epoch,
            value: c.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Uniform `[−π, π)` initial parameters from the run seed.
pub fn initial_theta<T: Real>(n_params: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    (0..n_params)
        .map(|_| T::lit(rng.random_range(-pi..pi)))
        .collect()
}

pub fn train_parametric<T: Real>(dataset: &Dataset<T>, config: &RunConfig<T>) -> Result<EmbeddingRun<T>> {
    let problem = Problem::new(dataset.clone(), config)?;
    train_problem(&problem, config)
}

/// Trains on a prepared problem, so that P is computed only once per dataset.
pub fn train_problem<T: Real>(problem: &Problem<T>, config: &RunConfig<T>) -> Result<EmbeddingRun<T>> {
    let mut theta = initial_theta::<T>(problem.n_params(), config.seed);
    let mut adam = AdamState::new(theta.len(), config.adam);
    let mut trajectory = Vec::with_capacity(config.epochs + 1);
    let mut costs = Vec::with_capacity(config.epochs + 1);
    trajectory.push(theta.clone());
    for epoch in 0..config.epochs {
        let mut cost_here = None;
        let mut grad_fn = |t: &[T]| {
            let (c, g) = problem.cost_gradient(t)?;
            cost_here.get_or_insert(c);
            Ok(g)
        };
        sam_adam_step(&mut adam, &mut theta, &mut grad_fn, &config.sam)?;
        costs.push(check_finite(epoch, cost_here.expect("gradient evaluated"))?);
        trajectory.push(theta.clone());
    }
    let last = problem.forward(&theta)?;
    costs.push(check_finite(config.epochs, last.cost)?);
    Ok(EmbeddingRun {
        config: config.clone(),
        theta_trajectory: trajectory,
        cost_history: costs,
        final_points: last.points,
        labels: problem.dataset.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun<T> {
    pub points: Vec<[T; 2]>,
    /// Cost at the initialisation and after every epoch.
    pub cost_history: Vec<T>,
}

fn baseline_cost_grad<T: Real>(p: &SimilarityMatrix<T>, flat: &[T]) -> Result<(T, Vec<T>)> {
    let y: Vec<[T; 2]> = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let q = student_t_q(&y);
    let cost = kl_cost(p, &q)?;
    let g = grad_kl_wrt_y(p, &q, &y)?;
    Ok((cost, g.into_iter().flatten().collect()))
}

/// Plain t-SNE: the points themselves are the parameters.
pub fn train_nonparametric<T: Real>(p: &SimilarityMatrix<T>, config: &RunConfig<T>) -> Result<BaselineRun<T>> {
    config.sam.validate()?;
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut flat: Vec<T> = (0..2 * n).map(|_| T::lit(normal.sample(&mut rng))).collect();
    let mut adam = AdamState::new(flat.len(), config.adam);
    let mut costs = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let mut cost_here = None;
        let mut grad_fn = |t: &[T]| {
            let (c, g) = baseline_cost_grad(p, t)?;
            cost_here.get_or_insert(c);
            Ok(g)
        };
        sam_adam_step(&mut adam, &mut flat, &mut grad_fn, &config.sam)?;
        costs.push(check_finite(epoch, cost_here.expect("gradient evaluated"))?);
    }
    let (last, _) = baseline_cost_grad(p, &flat)?;
    costs.push(check_finite(config.epochs, last)?);
    Ok(BaselineRun {
        points: flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        cost_history: costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::feature_map_state;
    use crate::quantum::{apply_gate, plus_state, zero_state, AngleSource, GateOp};
    use crate::similarity::conditional_row;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;
    use std::f64::consts::FRAC_PI_2;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{}", i % 2)).collect()
    }

    #[test]
    fn feature_vectors() {
        let v = states_to_feature_vectors(&[plus_state::<f64>(4).unwrap(), zero_state(4).unwrap()]).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(v[0][k], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(v[1][k], 0.0);
        }
        // RY(π/2)|0⟩ on qubit 0; RY(−π/2)|0⟩ = |+⟩ on the others (exp(+iθY/2) convention)
        let mut s = zero_state::<f64>(4).unwrap();
        for q in 0..4 {
            let a = if q == 0 { FRAC_PI_2 } else { -FRAC_PI_2 };
            s = apply_gate(&s, &GateOp::ry(q, AngleSource::Fixed(a)).unwrap(), a).unwrap();
        }
        for (i, a) in s.amplitudes().iter().enumerate() {
            let sign = if i & 1 == 1 { -1.0 } else { 1.0 };
            assert_abs_diff_eq!(a.re, sign * 0.25, epsilon = 1e-15);
        }
        let v = states_to_feature_vectors(&[s]).unwrap();
        assert_abs_diff_eq!(v[0][0], -1.0, epsilon = 1e-14);
        for k in 1..4 {
            assert_abs_diff_eq!(v[0][k], 1.0, epsilon = 1e-14);
        }
        assert!(states_to_feature_vectors::<f64>(&[]).is_err());
    }

    #[test]
    fn compute_p_symmetric_cases() {
        let cfg = RunConfig::<f64> {
            perplexity: PerplexityConfig::with_target(2.0),
            ..Default::default()
        };
        let h = 3f64.sqrt() / 2.0;
        let ds = Dataset::classical(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]], labels(3));
        let p = compute_p(&ds, &cfg).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert_abs_diff_eq!(p.get(i, j), want, epsilon = 1e-12);
            }
        }

        let mut basis = Vec::new();
        for k in 0..4 {
            let mut amps = vec![Complex::new(0.0, 0.0); 4];
            amps[k] = Complex::new(1.0, 0.0);
            basis.push(StateVector::from_amplitudes(amps).unwrap());
        }
        let qcfg = RunConfig {
            backend: Backend::Infidelity,
            perplexity: PerplexityConfig::with_target(3.0),
            ..cfg.clone()
        };
        let p = compute_p(&Dataset::quantum(basis, labels(4)), &qcfg).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.0 } else { 1.0 / 12.0 };
                assert_abs_diff_eq!(p.get(i, j), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_dominates_row() {
        // point 1 duplicates point 0; the rest are spread out
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 2.0],
            vec![3.0, 1.0],
        ];
        let d2 = euclidean_d2(&x).unwrap();
        let mut prev = 0.0;
        for sigma in [2.0, 1.0, 0.5, 0.25, 0.1] {
            let row = conditional_row(d2.row(0), 0, sigma).unwrap();
            let direct = 1.0
                / (1.0
                    + [1.0, 4.0, 10.0]
                        .iter()
                        .map(|d: &f64| (-d / (2.0 * sigma * sigma)).exp())
                        .sum::<f64>());
            assert_abs_diff_eq!(row[1], direct, epsilon = 1e-14);
            assert!(row[1] > prev);
            prev = row[1];
        }
        assert!(prev > 0.999);
    }

    #[test]
    fn backend_mismatch_rejected() {
        let ds = Dataset::classical(vec![vec![0.0; 4]; 3], labels(3));
        let cfg = RunConfig::<f64> {
            backend: Backend::Infidelity,
            ..Default::default()
        };
        assert!(matches!(compute_p(&ds, &cfg), Err(Error::Config(_))));
        let qs = Dataset::quantum(vec![plus_state::<f64>(4).unwrap(); 3], labels(3));
        assert!(matches!(compute_p(&qs, &RunConfig::default()), Err(Error::Config(_))));
        assert_eq!("neg_log_fidelity".parse::<Backend>().unwrap(), Backend::NegLogFidelity);
        assert!("cosine".parse::<Backend>().is_err());
    }

    #[test]
    fn two_points_are_degenerate() {
        let ds = Dataset::classical(vec![vec![0.1, 0.2, 0.3, 0.4], vec![-0.5, 0.0, 0.9, 0.2]], labels(2));
        let cfg = RunConfig::<f64> {
            depth: 1,
            epochs: 3,
            ..Default::default()
        };
        let theta = initial_theta(16, 5);
        let f = forward(&ds, &theta, &cfg).unwrap();
        assert_abs_diff_eq!(f.cost, 0.0, epsilon = 1e-15);
        let g = cost_gradient(&ds, &theta, &cfg).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));

        let p = compute_p(&ds, &cfg).unwrap();
        let base = train_nonparametric(&p, &cfg).unwrap();
        let again = train_nonparametric(&p, &RunConfig { epochs: 0, ..cfg.clone() }).unwrap();
        assert_eq!(base.points, again.points);
    }

    #[test]
    fn forward_matches_manual_composition() {
        let x: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..4).map(|k| ((i * 4 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let ds = Dataset::classical(x.clone(), labels(6));
        let cfg = RunConfig::<f64> {
            depth: 1,
            perplexity: PerplexityConfig::with_target(3.0),
            ..Default::default()
        };
        let theta = initial_theta(16, 11);
        let f = forward(&ds, &theta, &cfg).unwrap();

        let p = joint_p(
            &calibrated_conditionals(&euclidean_d2(&x).unwrap(), &cfg.perplexity).unwrap(),
        )
        .unwrap();
        let spec = cfg.ansatz_spec(&ds);
        let y: Vec<[f64; 2]> = x
            .iter()
            .map(|xi| crate::ansatz::embed_point(&spec, &theta, EmbedInput::Features(xi)).unwrap())
            .collect();
        let manual = kl_cost(&p, &student_t_q(&y)).unwrap();
        assert_eq!(f.cost, manual);
        assert!(f.cost >= 0.0);
    }

    #[test]
    fn infidelity_run_on_feature_map_states_is_deterministic() {
        let states: Vec<_> = (0..6)
            .map(|i| {
                let x: Vec<f64> = (0..4).map(|k| ((i + 2 * k) as f64 * 0.5).cos()).collect();
                feature_map_state(&x).unwrap()
            })
            .collect();
        let ds = Dataset::quantum(states, labels(6));
        let cfg = RunConfig::<f64> {
            backend: Backend::Infidelity,
            depth: 1,
            epochs: 5,
            perplexity: PerplexityConfig::with_target(3.0),
            ..Default::default()
        };
        let a = train_parametric(&ds, &cfg).unwrap();
        let b = train_parametric(&ds, &cfg).unwrap();
        assert_eq!(a.cost_history, b.cost_history);
        assert_eq!(a.theta_trajectory.len(), 6);
        assert_eq!(a.theta_trajectory[0].len(), 16);
        assert_eq!(a.cost_history.len(), 6);
    }
}
