//! Adam, and sharpness-aware minimisation (SAM) with Adam as the base step.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> Default for AdamConfig<T> {
    fn default() -> Self {
        Self {
            lr: T::lit(0.01),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig<T>,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n_params: usize, config: AdamConfig<T>) -> Self {
        Self {
            config,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[T] {
        &self.m
    }

    pub fn second_moment(&self) -> &[T] {
        &self.v
    }

    /// One bias-corrected Adam update of `theta` in place.
    pub fn step(&mut self, theta: &mut [T], grad: &[T]) -> Result<()> {
        let n = self.m.len();
        if theta.len() != n || grad.len() != n {
            return Err(Error::Dimension {
                what: "adam parameter/gradient length",
                expected: n,
                got: if theta.len() != n { theta.len() } else { grad.len() },
            });
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let t = T::from_u64(self.t).expect("step count representable");
        let bc1 = T::one() - beta1.powf(t);
        let bc2 = T::one() - beta2.powf(t);
        for k in 0..n {
            let g = grad[k];
            self.m[k] = beta1 * self.m[k] + (T::one() - beta1) * g;
            self.v[k] = beta2 * self.v[k] + (T::one() - beta2) * g * g;
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            theta[k] = theta[k] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

pub fn adam_step<T: Real>(state: &mut AdamState<T>, theta: &mut [T], grad: &[T]) -> Result<()> {
    state.step(theta, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamConfig<T> {
    /// Neighbourhood radius.
    pub rho: T,
    /// Coefficient of an l2 penalty `wd/2 ‖θ‖²` added to the cost.
    pub weight_decay: T,
}

impl<T: Real> Default for SamConfig<T> {
    fn default() -> Self {
        Self {
            rho: T::lit(0.05),
            weight_decay: T::zero(),
        }
    }
}

impl<T: Real> SamConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= T::zero()) || !self.rho.is_finite() {
            return Err(Error::Config(format!("SAM rho must be >= 0, got {}", self.rho)));
        }
        if !(self.weight_decay >= T::zero()) {
            return Err(Error::Config("weight decay must be >= 0".into()));
        }
        Ok(())
    }
}

fn regularised<T: Real, F>(grad_fn: &mut F, theta: &[T], wd: T) -> Result<Vec<T>>
where
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let mut g = grad_fn(theta)?;
    if g.len() != theta.len() {
        return Err(Error::Dimension {
            what: "gradient length",
            expected: theta.len(),
            got: g.len(),
        });
    }
    if wd > T::zero() {
        for (gk, tk) in g.iter_mut().zip(theta) {
            *gk = *gk + wd * *tk;
        }
    }
    Ok(g)
}

/// Gradient at the ascent point `θ + ρ g/‖g‖₂`, where `g` is the gradient at `θ`.
///
/// Always calls `grad_fn` exactly twice. A zero gradient leaves the ascent point at `θ`.
pub fn sam_gradient<T: Real, F>(grad_fn: &mut F, theta: &[T], config: &SamConfig<T>) -> Result<Vec<T>>
where
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let g = regularised(grad_fn, theta, config.weight_decay)?;
    let norm = g.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let scale = if norm > T::zero() {
        config.rho / norm
    } else {
        T::zero()
    };
    let ascent: Vec<T> = theta.iter().zip(&g).map(|(t, gk)| *t + scale * *gk).collect();
    regularised(grad_fn, &ascent, config.weight_decay)
}

/// SAM gradient followed by an Adam step taken from the original `theta`.
pub fn sam_adam_step<T: Real, F>(
    state: &mut AdamState<T>,
    theta: &mut [T],
    grad_fn: &mut F,
    config: &SamConfig<T>,
) -> Result<()>
where
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let g = sam_gradient(grad_fn, theta, config)?;
    state.step(theta, &g)
}
