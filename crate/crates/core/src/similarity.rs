//! Pairwise distances, perplexity-calibrated Gaussian affinities, Student-t
//! affinities, the KL cost and its gradient with respect to the embedding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::{overlap, StateVector};
use crate::scalar::Real;

/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Overlap magnitudes below this make the negative-log-fidelity distance infinite.
pub const MIN_OVERLAP: f64 = 1e-12;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    what: "square matrix row",
                    expected: n,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// Squared distances: symmetric, zero diagonal, non-negative.
pub type DistanceMatrix<T> = SquareMatrix<T>;

/// Joint similarities (P or Q): zero diagonal, non-negative, summing to one.
pub type SimilarityMatrix<T> = SquareMatrix<T>;

fn pairwise<T: Real, F>(n: usize, f: F) -> Result<DistanceMatrix<T>>
where
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i < j { f(i, j) } else { Ok(T::zero()) })
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = SquareMatrix::from_rows(&rows)?;
    for i in 0..n {
        for j in 0..i {
            let v = m.get(j, i);
            m.set(i, j, v);
        }
    }
    Ok(m)
}

pub fn euclidean_d2<T: Real>(points: &[Vec<T>]) -> Result<DistanceMatrix<T>> {
    if let Some(first) = points.first() {
        let d = first.len();
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::Dimension {
                what: "point dimension",
                expected: d,
                got: bad.len(),
            });
        }
    }
    pairwise(points.len(), |i, j| {
        Ok(points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum())
    })
}

fn check_states<T: Real>(states: &[StateVector<T>]) -> Result<()> {
    if let Some(first) = states.first() {
        if let Some(bad) = states.iter().find(|s| s.n_qubits() != first.n_qubits()) {
            return Err(Error::Dimension {
                what: "state qubit count",
                expected: first.n_qubits(),
                got: bad.n_qubits(),
            });
        }
    }
    Ok(())
}

/// `1 − |⟨ψ_i|ψ_j⟩|²`, the square of the infidelity distance.
pub fn infidelity_d2<T: Real>(states: &[StateVector<T>]) -> Result<DistanceMatrix<T>> {
    check_states(states)?;
    pairwise(states.len(), |i, j| {
        let f = overlap(&states[i], &states[j]).norm_sqr();
        Ok((T::one() - f).max(T::zero()))
    })
}

/// `(−log|⟨ψ_i|ψ_j⟩|)²`.
pub fn neg_log_fidelity_d2<T: Real>(states: &[StateVector<T>]) -> Result<DistanceMatrix<T>> {
    check_states(states)?;
    pairwise(states.len(), |i, j| {
        let mag = overlap(&states[i], &states[j]).norm();
        if mag < T::lit(MIN_OVERLAP) {
            return Err(Error::InfiniteDistance { i, j });
        }
        let d = -mag.min(T::one()).ln();
        Ok(d * d)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityConfig<T> {
    pub target: T,
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for PerplexityConfig<T> {
    fn default() -> Self {
        Self {
            target: T::lit(30.0),
            tolerance: T::lit(1e-5),
            max_iterations: 200,
        }
    }
}

impl<T: Real> PerplexityConfig<T> {
    pub fn with_target(target: T) -> Self {
        Self {
            target,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target > T::one()) {
            return Err(Error::Config(format!(
                "perplexity must exceed 1, got {}",
                self.target
            )));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::Config("perplexity tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Gaussian conditional distribution `p_{j|i}` for one row of squared distances.
pub fn conditional_row<T: Real>(d2_row: &[T], i: usize, sigma: T) -> Result<Vec<T>> {
    let min = d2_row
        .iter()
        .enumerate()
        .filter(|&(j, d)| j != i && d.is_finite())
        .map(|(_, d)| *d)
        .fold(T::infinity(), T::min);
    if !min.is_finite() {
        return Err(Error::DegenerateRow(i));
    }
    let denom = T::lit(2.0) * sigma * sigma;
    let mut row: Vec<T> = d2_row
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if j == i || !d.is_finite() {
                T::zero()
            } else {
                (-(d - min) / denom).exp()
            }
        })
        .collect();
    let total: T = row.iter().copied().sum();
    for p in &mut row {
        *p = *p / total;
    }
    Ok(row)
}

/// `2^H` with `H` the Shannon entropy in bits; zero entries contribute nothing.
pub fn perplexity_of<T: Real>(row: &[T]) -> T {
    let h: T = row
        .iter()
        .filter(|p| **p > T::zero())
        .map(|&p| -p * p.log2())
        .sum();
    h.exp2()
}

/// Finds `σ_i` whose conditional row has the target perplexity.
///
/// The bracket starts at `(1e-3, 1e3)` and is widened tenfold (at most 20
/// times per side) before geometric bisection.
pub fn calibrate_sigma<T: Real>(d2_row: &[T], i: usize, config: &PerplexityConfig<T>) -> Result<T> {
    config.validate()?;
    let neighbours = d2_row
        .iter()
        .enumerate()
        .filter(|&(j, d)| j != i && d.is_finite())
        .count();
    if neighbours < 2 {
        return Err(Error::DegenerateRow(i));
    }
    let max = T::from_usize_lossy(neighbours);
    if config.target > max + config.tolerance {
        return Err(Error::UnreachablePerplexity {
            row: i,
            target: config.target.to_f64().unwrap_or(f64::NAN),
            max: neighbours as f64,
        });
    }
    let perp = |s: T| -> Result<T> { Ok(perplexity_of(&conditional_row(d2_row, i, s)?)) };

    let ten = T::lit(10.0);
    let mut lo = T::lit(1e-3);
    let mut hi = T::lit(1e3);
    for _ in 0..20 {
        if perp(lo)? <= config.target {
            break;
        }
        lo = lo / ten;
    }
    for _ in 0..20 {
        if perp(hi)? >= config.target {
            break;
        }
        hi = hi * ten;
    }

    let mut best = (T::infinity(), lo, T::nan());
    for _ in 0..config.max_iterations {
        let mid = (lo * hi).sqrt();
        let p = perp(mid)?;
        let err = (p - config.target).abs();
        if err < best.0 {
            best = (err, mid, p);
        }
        if err <= config.tolerance {
            return Ok(mid);
        }
        if p < config.target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::SigmaNotConverged {
        row: i,
        sigma: best.1.to_f64().unwrap_or(f64::NAN),
        achieved: best.2.to_f64().unwrap_or(f64::NAN),
    })
}

/// Calibrated conditional matrix, one row per point.
///
/// Rows with a single neighbour are one-hot regardless of σ and skip calibration.
pub fn calibrated_conditionals<T: Real>(
    d2: &DistanceMatrix<T>,
    config: &PerplexityConfig<T>,
) -> Result<Vec<Vec<T>>> {
    config.validate()?;
    let n = d2.n();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let row = d2.row(i);
            let finite = row
                .iter()
                .enumerate()
                .filter(|&(j, d)| j != i && d.is_finite())
                .count();
            if finite == 1 {
                return conditional_row(row, i, T::one());
            }
            let sigma = calibrate_sigma(row, i, config)?;
            conditional_row(row, i, sigma)
        })
        .collect()
}

/// Symmetrised joint distribution `p_ij = (p_{i|j} + p_{j|i}) / 2n`.
pub fn joint_p<T: Real>(conditionals: &[Vec<T>]) -> Result<SimilarityMatrix<T>> {
    let c = SquareMatrix::from_rows(conditionals)?;
    let n = c.n();
    let scale = T::one() / (T::lit(2.0) * T::from_usize_lossy(n));
    let mut p = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p.set(i, j, (c.get(i, j) + c.get(j, i)) * scale);
            }
        }
    }
    Ok(p)
}

#[inline]
fn sq_dist<T: Real>(a: &[T; 2], b: &[T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Student-t (one degree of freedom) joint similarities of 2-D points.
pub fn student_t_q<T: Real>(y: &[[T; 2]]) -> SimilarityMatrix<T> {
    let n = y.len();
    let mut q = SquareMatrix::zeros(n);
    let mut total = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let k = T::one() / (T::one() + sq_dist(&y[i], &y[j]));
            q.set(i, j, k);
            q.set(j, i, k);
            total = total + k + k;
        }
    }
    if total > T::zero() {
        for v in &mut q.values {
            *v = *v / total;
        }
    }
    q
}

/// `Σ_{i≠j} p_ij log(p_ij / q_ij)`; zero-probability P entries contribute nothing.
pub fn kl_cost<T: Real>(p: &SimilarityMatrix<T>, q: &SimilarityMatrix<T>) -> Result<T> {
    if p.n() != q.n() {
        return Err(Error::Dimension {
            what: "P vs Q size",
            expected: p.n(),
            got: q.n(),
        });
    }
    let floor = T::lit(PROB_FLOOR);
    let n = p.n();
    let mut c = T::zero();
    for i in 0..n {
        for j in 0..n {
            let pij = p.get(i, j);
            if i != j && pij > T::zero() {
                c = c + pij * (pij.max(floor) / q.get(i, j).max(floor)).ln();
            }
        }
    }
    Ok(c)
}

/// `∂C/∂y_i = 4 Σ_j (p_ij − q_ij)(y_i − y_j)(1 + ‖y_i − y_j‖²)^{-1}`.
pub fn grad_kl_wrt_y<T: Real>(
    p: &SimilarityMatrix<T>,
    q: &SimilarityMatrix<T>,
    y: &[[T; 2]],
) -> Result<Vec<[T; 2]>> {
    let n = y.len();
    if p.n() != n || q.n() != n {
        return Err(Error::Dimension {
            what: "similarity matrices vs points",
            expected: n,
            got: p.n().min(q.n()),
        });
    }
    let four = T::lit(4.0);
    Ok((0..n)
        .map(|i| {
            let mut g = [T::zero(); 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = (p.get(i, j) - q.get(i, j)) / (T::one() + sq_dist(&y[i], &y[j]));
                g[0] = g[0] + w * (y[i][0] - y[j][0]);
                g[1] = g[1] + w * (y[i][1] - y[j][1]);
            }
            [four * g[0], four * g[1]]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{plus_state, zero_state};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;

    #[test]
    fn euclidean_examples() {
        let same = euclidean_d2(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert!(same.values().iter().all(|&v| v == 0.0));
        let d = euclidean_d2(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(d.get(0, 1), 25.0);
        assert_eq!(d.get(1, 0), 25.0);
        assert!(euclidean_d2(&[vec![0.0, 0.0], vec![3.0]]).is_err());
    }

    #[test]
    fn fidelity_distances() {
        let z = zero_state::<f64>(1).unwrap();
        let one = StateVector::from_amplitudes(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)])
            .unwrap();
        let p = plus_state::<f64>(1).unwrap();
        let d = infidelity_d2(&[z.clone(), one.clone(), p.clone()]).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_abs_diff_eq!(d.get(0, 1), 1.0);
        assert_abs_diff_eq!(d.get(2, 0), 0.5, epsilon = 1e-15);

        let nl = neg_log_fidelity_d2(&[z.clone(), p.clone(), z.clone()]).unwrap();
        assert_abs_diff_eq!(nl.get(0, 2), 0.0);
        // (−ln(1/√2))² = (ln 2 / 2)²
        assert_abs_diff_eq!(nl.get(0, 1), 0.120_113_253_479_550_35, epsilon = 1e-15);
        assert_eq!(
            neg_log_fidelity_d2(&[z, one]),
            Err(Error::InfiniteDistance { i: 0, j: 1 })
        );
    }

    #[test]
    fn conditional_row_examples() {
        let r = conditional_row(&[0.0, 2.0, 2.0], 0, 0.7).unwrap();
        assert_eq!(r, vec![0.0, 0.5, 0.5]);
        let r = conditional_row(&[0.0, 1.0, 4.0], 0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert_abs_diff_eq!(r[1], 0.952_574_126_822_433, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2], 0.047_425_873_177_566_635, epsilon = 1e-12);
        let r = conditional_row(&[5.0, 0.0, 9.0, 1.0], 1, 1e200).unwrap();
        for j in [0, 2, 3] {
            assert_abs_diff_eq!(r[j], 1.0 / 3.0, epsilon = 1e-15);
        }
        assert!(conditional_row(&[0.0, f64::INFINITY], 0, 1.0).is_err());
    }

    #[test]
    fn perplexity_examples() {
        assert_abs_diff_eq!(perplexity_of(&[0.0, 0.25, 0.25, 0.25, 0.25]), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(perplexity_of(&[0.0, 1.0, 0.0]), 1.0);
        let p = perplexity_of(&[0.0, 0.952_574_126_822_433, 0.047_425_873_177_566_635]);
        assert_abs_diff_eq!(p, 1.210_296_016_115_325_3, epsilon = 1e-9);
    }

    #[test]
    fn calibrate_examples() {
        let cfg = PerplexityConfig {
            target: 3.0,
            ..Default::default()
        };
        let s = calibrate_sigma(&[0.0, 1.0, 1.0, 1.0], 0, &cfg).unwrap();
        assert!(s > 0.0);

        let cfg = PerplexityConfig {
            target: 1.210_296_016_115_325_3,
            tolerance: 1e-4,
            max_iterations: 200,
        };
        let s = calibrate_sigma(&[0.0, 1.0, 4.0], 0, &cfg).unwrap();
        assert_abs_diff_eq!(s, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-3);

        let cfg = PerplexityConfig::with_target(3.0);
        assert!(matches!(
            calibrate_sigma(&[0.0, 1.0, 4.0], 0, &cfg),
            Err(Error::UnreachablePerplexity { .. })
        ));
        assert!(PerplexityConfig::with_target(1.0).validate().is_err());
    }

    #[test]
    fn joint_p_examples() {
        let p = joint_p(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.get(0, 1), 0.5);
        assert_eq!(p.get(1, 0), 0.5);
        let c = vec![
            vec![0.0, 0.7, 0.3],
            vec![0.1, 0.0, 0.9],
            vec![0.5, 0.5, 0.0],
        ];
        let p = joint_p(&c).unwrap();
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-15);
        assert_eq!(p.get(0, 2), p.get(2, 0));
    }

    #[test]
    fn student_t_examples() {
        let q = student_t_q(&[[0.0, 0.0], [3.0, -1.0]]);
        assert_eq!(q.get(0, 1), 0.5);
        let q = student_t_q(&[[1.0, 1.0]; 3]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 1.0 / 6.0 };
                assert_abs_diff_eq!(q.get(i, j), want, epsilon = 1e-15);
            }
        }
        let near = student_t_q(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let far = student_t_q(&[[0.0, 0.0], [1.0, 0.0], [0.0, 5.0]]);
        assert!(far.get(0, 2) < near.get(0, 2));
        assert!(far.get(1, 2) < near.get(1, 2));
    }

    #[test]
    fn kl_examples() {
        let q = student_t_q(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]);
        assert_abs_diff_eq!(kl_cost(&q, &q).unwrap(), 0.0, epsilon = 1e-15);
        let two = student_t_q(&[[0.0, 0.0], [4.0, 0.0]]);
        let p2 = joint_p(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(kl_cost(&p2, &two).unwrap(), 0.0);
        let g = grad_kl_wrt_y(&p2, &two, &[[0.0, 0.0], [4.0, 0.0]]).unwrap();
        assert_eq!(g, vec![[0.0, 0.0]; 2]);
    }
}
