//! Sequential minimal optimization for the box- and equality-constrained SVM
//! dual
//!
//! ```text
//! maximize  Σβ_i − ½ βᵀQβ   s.t.  0 ≤ β_i ≤ C,  Σ y_i β_i = 0
//! ```
//!
//! where `Q` already carries the label signs (`Q = Ŷ P Ŷ`). Working pairs are
//! chosen as the maximal KKT violators and updated analytically.

use nalgebra::{DMatrix, DVector};

use crate::error::{DglError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    /// Stop when the maximal KKT violation `m(β) − M(β)` falls below this.
    pub tol: f64,
    /// Budget in passes; one pass is `l` pair updates.
    pub max_passes: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_passes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<T: Real> {
    pub beta: DVector<T>,
    pub bias: T,
    /// Dual objective after every pair update, starting at β = 0.
    pub objective_trace: Vec<T>,
    pub updates: usize,
    pub violation: T,
}

impl<T: Real> DualSolution<T> {
    pub fn objective(&self) -> T {
        *self.objective_trace.last().expect("trace starts at zero")
    }
}

/// Dual objective `Σβ − ½βᵀQβ`.
pub fn dual_objective<T: Real>(q: &DMatrix<T>, beta: &DVector<T>) -> T {
    beta.sum() - beta.dot(&(q * beta)) * T::lit(0.5)
}

pub fn solve_dual<T: Real>(
    q: &DMatrix<T>,
    labels: &[T],
    upper: T,
    options: &SmoOptions,
) -> Result<DualSolution<T>> {
    let l = labels.len();
    if !q.is_square() || q.nrows() != l {
        return Err(DglError::DimensionMismatch {
            context: "SVM dual matrix vs labels",
            expected: l,
            found: q.nrows(),
        });
    }
    if !(upper > T::zero()) {
        return Err(DglError::InvalidParameter {
            name: "box bound",
            value: upper.to_string(),
            reason: "must be positive",
        });
    }
    let tol = T::lit(options.tol);
    let tau = T::lit(1e-12);
    let half = T::lit(0.5);
    let mut beta = DVector::<T>::zeros(l);
    // Gradient of ½βᵀQβ − Σβ.
    let mut grad = DVector::<T>::from_element(l, -T::one());
    let mut trace = vec![T::zero()];
    let budget = options.max_passes * l.max(1);
    let mut updates = 0;

    let in_up = |b: T, y: T| (y > T::zero() && b < upper) || (y < T::zero() && b > T::zero());
    let in_low = |b: T, y: T| (y > T::zero() && b > T::zero()) || (y < T::zero() && b < upper);

    let violation = loop {
        let mut i = None;
        let mut j = None;
        let mut m_up = -T::max_value().unwrap_or(T::lit(f64::MAX));
        let mut m_low = T::max_value().unwrap_or(T::lit(f64::MAX));
        for t in 0..l {
            let v = -labels[t] * grad[t];
            if in_up(beta[t], labels[t]) && v > m_up {
                m_up = v;
                i = Some(t);
            }
            if in_low(beta[t], labels[t]) && v < m_low {
                m_low = v;
                j = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i, j) else {
            break T::zero();
        };
        let gap = m_up - m_low;
        if gap < tol {
            break gap.max(T::zero());
        }
        if updates >= budget {
            return Err(DglError::DualNoConvergence {
                passes: options.max_passes,
                violation: gap.as_f64(),
            });
        }
        updates += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let (bi, bj) = if labels[i] != labels[j] {
            let mut quad = q[(i, i)] + q[(j, j)] + T::lit(2.0) * q[(i, j)];
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_i - old_j;
            let (mut bi, mut bj) = (old_i + delta, old_j + delta);
            if diff > T::zero() {
                if bj < T::zero() {
                    bj = T::zero();
                    bi = diff;
                }
            } else if bi < T::zero() {
                bi = T::zero();
                bj = -diff;
            }
            if diff > T::zero() {
                if bi > upper {
                    bi = upper;
                    bj = upper - diff;
                }
            } else if bj > upper {
                bj = upper;
                bi = upper + diff;
            }
            (bi, bj)
        } else {
            let mut quad = q[(i, i)] + q[(j, j)] - T::lit(2.0) * q[(i, j)];
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = old_i + old_j;
            let (mut bi, mut bj) = (old_i - delta, old_j + delta);
            if sum > upper {
                if bi > upper {
                    bi = upper;
                    bj = sum - upper;
                }
            } else if bj < T::zero() {
                bj = T::zero();
                bi = sum;
            }
            if sum > upper {
                if bj > upper {
                    bj = upper;
                    bi = sum - upper;
                }
            } else if bi < T::zero() {
                bi = T::zero();
                bj = sum;
            }
            (bi, bj)
        };
        beta[i] = bi;
        beta[j] = bj;
        let (di, dj) = (bi - old_i, bj - old_j);
        for t in 0..l {
            grad[t] += q[(t, i)] * di + q[(t, j)] * dj;
        }
        // Σβ − ½βᵀQβ = −½βᵀ(grad − 1) − ... simplified with Qβ = grad + 1.
        trace.push(half * beta.sum() - half * beta.dot(&grad));
    };

    let bias = recover_bias(&beta, &grad, labels, upper);
    Ok(DualSolution {
        beta,
        bias,
        objective_trace: trace,
        updates,
        violation,
    })
}

/// Bias from the KKT conditions: the mean of `−y_i G_i` over free multipliers,
/// or the midpoint of the feasible interval when every multiplier is at a
/// bound.
fn recover_bias<T: Real>(beta: &DVector<T>, grad: &DVector<T>, labels: &[T], upper: T) -> T {
    let mut free_sum = T::zero();
    let mut free_count = 0usize;
    let mut lower_bound: Option<T> = None;
    let mut upper_bound: Option<T> = None;
    for t in 0..labels.len() {
        let v = -labels[t] * grad[t];
        let positive = labels[t] > T::zero();
        if beta[t] > T::zero() && beta[t] < upper {
            free_sum += v;
            free_count += 1;
        } else if (beta[t] <= T::zero()) == positive {
            lower_bound = Some(lower_bound.map_or(v, |b| b.max(v)));
        } else {
            upper_bound = Some(upper_bound.map_or(v, |b| b.min(v)));
        }
    }
    if free_count > 0 {
        return free_sum / T::lit(free_count as f64);
    }
    match (lower_bound, upper_bound) {
        (Some(lo), Some(hi)) => (lo + hi) * T::lit(0.5),
        (Some(b), None) | (None, Some(b)) => b,
        (None, None) => T::zero(),
    }
}
