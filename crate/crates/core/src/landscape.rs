//! Loss-landscape diagnostics along the two principal directions of an
//! optimisation trajectory.
//!
//! Rows of the trajectory matrix are `θ_i − θ_n` for every epoch `i < n`.
//! Principal directions come from an SVD of the mean-centred matrix; the
//! projected path itself is not centred, so `θ_n` sits at the origin.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix<T> {
    rows: Vec<Vec<T>>,
    final_theta: Vec<T>,
}

impl<T: Real> TrajectoryMatrix<T> {
    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn final_theta(&self) -> &[T] {
        &self.final_theta
    }

    pub fn n_params(&self) -> usize {
        self.final_theta.len()
    }
}

pub fn build_trajectory_matrix<T: Real>(trajectory: &[Vec<T>]) -> Result<TrajectoryMatrix<T>> {
    let (last, earlier) = match trajectory.split_last() {
        Some((l, e)) if !e.is_empty() => (l, e),
        _ => {
            return Err(Error::Config(format!(
                "trajectory needs at least 2 entries, got {}",
                trajectory.len()
            )))
        }
    };
    let rows = earlier
        .iter()
        .map(|th| {
            if th.len() != last.len() {
                return Err(Error::Dimension {
                    what: "trajectory row",
                    expected: last.len(),
                    got: th.len(),
                });
            }
            Ok(th.iter().zip(last).map(|(a, b)| *a - *b).collect())
        })
        .collect::<Result<_>>()?;
    Ok(TrajectoryMatrix {
        rows,
        final_theta: last.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca<T> {
    pub dir1: Vec<T>,
    pub dir2: Vec<T>,
    /// Explained-variance ratios of the two directions, descending.
    pub explained: [T; 2],
    /// All singular values of the centred matrix, descending.
    pub singular_values: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Largest-magnitude entry made positive.
fn fix_sign<T: Real>(v: &mut [T]) {
    let pivot = v
        .iter()
        .copied()
        .fold(T::zero(), |best, x| if Float::abs(x) > Float::abs(best) { x } else { best });
    if pivot < T::zero() {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Unit vector orthogonal to `u`, built from the basis vector least aligned with it.
fn orthogonal_complement<T: Real>(u: &[T]) -> Vec<T> {
    let k = (0..u.len())
        .min_by(|&a, &b| {
            Float::abs(u[a])
                .partial_cmp(&Float::abs(u[b]))
                .expect("finite direction")
        })
        .expect("non-empty direction");
    let mut v: Vec<T> = u.iter().map(|&x| -x * u[k]).collect();
    v[k] = v[k] + T::one();
    let norm = Float::sqrt(dot(&v, &v));
    v.iter().map(|&x| x / norm).collect()
}

pub fn pca_two_components<T: Real + RealField>(m: &TrajectoryMatrix<T>) -> Result<Pca<T>> {
    let n_params = m.n_params();
    if n_params < 2 {
        return Err(Error::Config("need at least two parameters for a 2-D landscape".into()));
    }
    let r = m.rows.len();
    let rf = T::from_usize_lossy(r);
    let mean: Vec<T> = (0..n_params)
        .map(|k| m.rows.iter().map(|row| row[k]).sum::<T>() / rf)
        .collect();
    let centred = DMatrix::from_fn(r, n_params, |i, k| m.rows[i][k] - mean[k]);
    let svd = centred.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });
    let singular_values: Vec<T> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let total: T = singular_values.iter().map(|&s| s * s).sum();
    let scale = singular_values.first().copied().unwrap_or(T::zero());
    if !(total > T::zero()) || !(scale > T::lit(1e-300)) {
        return Err(Error::NoMovement);
    }

    let row_of = |i: usize| -> Vec<T> { (0..n_params).map(|k| v_t[(order[i], k)]).collect() };
    let mut dir1 = row_of(0);
    fix_sign(&mut dir1);
    let tiny = T::lit(1e-9);
    let mut dir2 = if order.len() >= 2 {
        let cand = row_of(1);
        let ok = Float::abs(dot(&cand, &dir1)) < tiny
            && Float::abs(dot(&cand, &cand) - T::one()) < tiny;
        if ok {
            cand
        } else {
            orthogonal_complement(&dir1)
        }
    } else {
        orthogonal_complement(&dir1)
    };
    fix_sign(&mut dir2);

    let s2 = singular_values.get(1).copied().unwrap_or(T::zero());
    let explained = [scale * scale / total, s2 * s2 / total];
    Ok(Pca {
        dir1,
        dir2,
        explained,
        singular_values,
    })
}

/// `((θ_i − θ_n)·dir1, (θ_i − θ_n)·dir2)` for every row, followed by the origin for `θ_n`.
pub fn project_trajectory<T: Real>(m: &TrajectoryMatrix<T>, dir1: &[T], dir2: &[T]) -> Result<Vec<[T; 2]>> {
    if dir1.len() != m.n_params() || dir2.len() != m.n_params() {
        return Err(Error::Dimension {
            what: "projection direction",
            expected: m.n_params(),
            got: if dir1.len() != m.n_params() { dir1.len() } else { dir2.len() },
        });
    }
    let mut pts: Vec<[T; 2]> = m.rows.iter().map(|r| [dot(r, dir1), dot(r, dir2)]).collect();
    pts.push([T::zero(), T::zero()]);
    Ok(pts)
}

/// `1.1 ×` the largest coordinate magnitude of the projected path (1 for a static path).
pub fn default_half_width<T: Real>(projected: &[[T; 2]]) -> T {
    let m = projected
        .iter()
        .flat_map(|p| p.iter())
        .fold(T::zero(), |acc, &v| acc.max(Float::abs(v)));
    if m > T::zero() {
        T::lit(1.1) * m
    } else {
        T::one()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell<T> {
    pub alpha: T,
    pub beta: T,
    pub cost: T,
    /// False when the cost evaluation failed or was not finite.
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid<T> {
    pub center: Vec<T>,
    pub dir1: Vec<T>,
    pub dir2: Vec<T>,
    pub half_width: T,
    pub resolution: usize,
    /// Row-major over `beta` (outer) then `alpha` (inner).
    pub cells: Vec<GridCell<T>>,
}

impl<T: Real> LandscapeGrid<T> {
    pub fn center_cell(&self) -> &GridCell<T> {
        let mid = self.resolution / 2;
        &self.cells[mid * self.resolution + mid]
    }

    pub fn at(&self, alpha_idx: usize, beta_idx: usize) -> &GridCell<T> {
        &self.cells[beta_idx * self.resolution + alpha_idx]
    }
}

/// Grid coordinate `i` of `resolution` nodes on `[−w, w]`; the middle node is exactly zero.
fn grid_coord<T: Real>(i: usize, resolution: usize, half_width: T) -> T {
    let num = 2 * i as i64 - (resolution as i64 - 1);
    half_width * T::from_i64(num).expect("grid index") / T::from_usize_lossy(resolution - 1)
}

pub fn evaluate_grid<T, F>(
    cost_fn: F,
    center: &[T],
    dir1: &[T],
    dir2: &[T],
    half_width: T,
    resolution: usize,
) -> Result<LandscapeGrid<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    if resolution < 3 || resolution % 2 == 0 {
        return Err(Error::Config(format!(
            "grid resolution must be odd and >= 3, got {resolution}"
        )));
    }
    if dir1.len() != center.len() || dir2.len() != center.len() {
        return Err(Error::Dimension {
            what: "grid direction",
            expected: center.len(),
            got: dir1.len().min(dir2.len()),
        });
    }
    if !(half_width > T::zero()) {
        return Err(Error::Config("grid half-width must be positive".into()));
    }
    let nodes: Vec<(T, T)> = (0..resolution)
        .flat_map(|b| {
            (0..resolution).map(move |a| {
                (
                    grid_coord(a, resolution, half_width),
                    grid_coord(b, resolution, half_width),
                )
            })
        })
        .collect();
    let cells = nodes
        .par_iter()
        .map(|&(alpha, beta)| {
            let theta: Vec<T> = center
                .iter()
                .zip(dir1.iter().zip(dir2))
                .map(|(c, (u, v))| *c + alpha * *u + beta * *v)
                .collect();
            let (cost, finite) = match cost_fn(&theta) {
                Ok(c) if c.is_finite() => (c, true),
                Ok(c) => (c, false),
                Err(_) => (T::nan(), false),
            };
            GridCell {
                alpha,
                beta,
                cost,
                finite,
            }
        })
        .collect();
    Ok(LandscapeGrid {
        center: center.to_vec(),
        dir1: dir1.to_vec(),
        dir2: dir2.to_vec(),
        half_width,
        resolution,
        cells,
    })
}
