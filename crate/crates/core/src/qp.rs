//! Convex QPs of the form
//!
//! ```text
//! minimize    λᵀQλ − 2Rᵀλ
//! subject to  λ_i ≥ ξ·λ_{i+1},  λ ≥ 0        (ξ ≥ 1)
//! ```
//!
//! The feasible set is a "damped monotone" cone with an exact O(r) Euclidean
//! projection, so the primary solver is accelerated projected gradient.
//! An exact active-set method over the cone's generators handles
//! rank-deficient or badly scaled `Q`, where first-order methods stall.
//! Both report the same fixed-point KKT certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::{DglError, Result};
use crate::scalar::Real;

/// Solver settings. `max_iter = None` means `50·r + 5000`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

impl QpOptions {
    pub fn iteration_budget(&self, r: usize) -> usize {
        self.max_iter.unwrap_or(50 * r + 5000)
    }
}

/// Which algorithm produced a [`QpSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpMethod {
    ProjectedGradient,
    ActiveSet,
    /// `Q` numerically zero: the projection of `R` is returned.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution<T: Real> {
    pub point: DVector<T>,
    pub objective: T,
    /// `‖λ − Π(λ − ∇f(λ))‖∞` with `∇f = 2Qλ − 2R`.
    pub kkt_residual: T,
    pub iterations: usize,
    pub method: QpMethod,
}

/// Euclidean projection onto `{λ : λ_i ≥ ξλ_{i+1}, λ ≥ 0}`.
///
/// With `μ_i = ξ^i λ_i` the constraints become `μ_0 ≥ μ_1 ≥ … ≥ 0` and the
/// distance a weighted isotonic regression with weights `ξ^{−2i}`. This runs
/// pool-adjacent-violators on that problem, then clamps at zero. Each pool
/// stores its sums relative to its first index so large `ξ^i` never
/// overflow.
pub fn project_damped_cone<T: Real>(x: &DVector<T>, damping: T) -> DVector<T> {
    struct Pool<T> {
        start: usize,
        len: usize,
        // Σ ξ^{-(i-start)} x_i and Σ ξ^{-2(i-start)} over the pool.
        weighted_sum: T,
        weight: T,
    }

    let inv = T::one() / damping;
    let mut pools: Vec<Pool<T>> = Vec::with_capacity(x.len());
    for (i, &value) in x.iter().enumerate() {
        pools.push(Pool {
            start: i,
            len: 1,
            weighted_sum: value,
            weight: T::one(),
        });
        while pools.len() > 1 {
            let right = &pools[pools.len() - 1];
            let left = &pools[pools.len() - 2];
            let gap = (right.start - left.start) as i32;
            let decay = inv.powi(gap);
            // Pool value at its first index is λ = sum/weight; the μ ordering
            // μ_left ≥ μ_right reads λ_left·ξ^{-gap} ≥ λ_right.
            let left_value = left.weighted_sum / left.weight;
            let right_value = right.weighted_sum / right.weight;
            if left_value * decay >= right_value {
                break;
            }
            let right = pools.pop().expect("two pools");
            let left = pools.last_mut().expect("two pools");
            left.weighted_sum += decay * right.weighted_sum;
            left.weight += decay * decay * right.weight;
            left.len += right.len;
        }
    }

    let mut out = DVector::zeros(x.len());
    for pool in &pools {
        let head = (pool.weighted_sum / pool.weight).max(T::zero());
        let mut value = head;
        for k in 0..pool.len {
            out[pool.start + k] = value;
            value *= inv;
        }
    }
    out
}

/// `λᵀQλ − 2Rᵀλ`.
pub fn objective<T: Real>(q: &DMatrix<T>, r: &DVector<T>, point: &DVector<T>) -> T {
    let qx = q * point;
    point.dot(&qx) - T::lit(2.0) * r.dot(point)
}

/// Fixed-point KKT residual `‖λ − Π(λ − (2Qλ − 2R))‖∞`.
pub fn kkt_residual<T: Real>(q: &DMatrix<T>, r: &DVector<T>, damping: T, point: &DVector<T>) -> T {
    let grad = (q * point - r) * T::lit(2.0);
    residual_from_gradient(point, &grad, damping)
}

fn residual_from_gradient<T: Real>(point: &DVector<T>, grad: &DVector<T>, damping: T) -> T {
    let stepped = point - grad;
    (point - project_damped_cone(&stepped, damping)).amax()
}

/// Residual accepted as converged: `tol` relative to the gradient scale.
fn certificate_threshold<T: Real>(tol: T, q_point: &DVector<T>, r: &DVector<T>) -> T {
    let scale = (q_point.amax().max(r.amax())) * T::lit(2.0);
    tol * (T::one() + scale)
}

/// Is `point` in the damped cone, up to `slack`?
pub fn cone_violation<T: Real>(point: &DVector<T>, damping: T) -> Option<(usize, T)> {
    let r = point.len();
    let mut worst: Option<(usize, T)> = None;
    for i in 0..r {
        let gap = if i + 1 < r {
            point[i] - damping * point[i + 1]
        } else {
            point[i]
        };
        let gap = gap.min(point[i]);
        if gap < T::zero() && worst.is_none_or(|(_, w)| -gap > w) {
            worst = Some((i, -gap));
        }
    }
    worst
}

fn validate<T: Real>(q: &DMatrix<T>, r: &DVector<T>, damping: T) -> Result<()> {
    if !q.is_square() || q.nrows() != r.len() {
        return Err(DglError::DimensionMismatch {
            context: "QP matrix vs linear term",
            expected: r.len(),
            found: q.nrows(),
        });
    }
    if !(damping >= T::one()) || !damping.is_finite() {
        return Err(DglError::InvalidParameter {
            name: "damping",
            value: damping.to_string(),
            reason: "damping factor must be at least 1",
        });
    }
    if q.iter().chain(r.iter()).any(|v| !v.is_finite()) {
        return Err(DglError::NonFinite { context: "QP data" });
    }
    Ok(())
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn largest_eigenvalue<T: Real>(a: &DMatrix<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::zero();
    }
    let mut v = DVector::from_element(n, T::one() / T::lit(n as f64).sqrt());
    // Perturb so the start is not orthogonal to the top eigenvector when `a`
    // has mixed-sign structure.
    for (i, x) in v.iter_mut().enumerate() {
        *x += T::lit(1e-3 * ((i % 7) as f64 - 3.0) / n as f64);
    }
    let mut estimate = T::zero();
    for _ in 0..500 {
        let w = a * &v;
        let norm = w.norm();
        if norm == T::zero() {
            return T::zero();
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= T::lit(1e-10) * next.abs() {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(T::zero())
}

fn finish<T: Real>(
    q: &DMatrix<T>,
    r: &DVector<T>,
    damping: T,
    point: DVector<T>,
    iterations: usize,
    method: QpMethod,
) -> QpSolution<T> {
    let objective = objective(q, r, &point);
    let kkt_residual = kkt_residual(q, r, damping, &point);
    QpSolution {
        point,
        objective,
        kkt_residual,
        iterations,
        method,
    }
}

fn no_convergence<T: Real>(best: &QpSolution<T>) -> DglError {
    DglError::QpNoConvergence {
        iterations: best.iterations,
        kkt_residual: best.kkt_residual.as_f64(),
        best_point: best.point.iter().map(|v| v.as_f64()).collect(),
        best_objective: best.objective.as_f64(),
    }
}

/// Accelerated projected gradient with objective-based momentum restarts and
/// step `1/L`, `L` the largest eigenvalue of `2Q`.
///
/// Starts from whichever of `Π(0)` and `Π(R)` has the lower objective, so the
/// result never does worse than either. Returns `QpNoConvergence` carrying the
/// best iterate if the KKT certificate is not reached within the budget.
pub fn solve<T: Real>(
    q: &DMatrix<T>,
    r: &DVector<T>,
    damping: T,
    options: &QpOptions,
) -> Result<QpSolution<T>> {
    validate(q, r, damping)?;
    projected_gradient(q, r, damping, options, None)
}

fn projected_gradient<T: Real>(
    q: &DMatrix<T>,
    r: &DVector<T>,
    damping: T,
    options: &QpOptions,
    warm_start: Option<DVector<T>>,
) -> Result<QpSolution<T>> {
    let dim = r.len();
    if dim == 0 {
        return Ok(finish(q, r, damping, DVector::zeros(0), 0, QpMethod::ProjectedGradient));
    }
    let tol = T::lit(options.tol);
    let lipschitz = T::lit(2.0) * largest_eigenvalue(q);
    if lipschitz < T::lit(1e-12) {
        // Linear objective: no finite step size; fall back to Π(R).
        let point = project_damped_cone(r, damping);
        return Ok(finish(q, r, damping, point, 0, QpMethod::Degenerate));
    }
    // Slight overestimate guards against power-iteration undershoot.
    let step = T::one() / (lipschitz * T::lit(1.01));
    let two = T::lit(2.0);

    let mut candidates = vec![DVector::zeros(dim), project_damped_cone(r, damping)];
    if let Some(start) = warm_start {
        candidates.push(project_damped_cone(&start, damping));
    }
    let mut x = candidates
        .into_iter()
        .map(|c| {
            let f = objective(q, r, &c);
            (c, f)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(c, _)| c)
        .expect("at least two candidates");
    let mut qx = q * &x;
    let mut fx = x.dot(&qx) - two * r.dot(&x);

    let budget = options.iteration_budget(dim);
    let mut y = x.clone();
    let mut qy = qx.clone();
    let mut momentum = T::one();
    let mut iterations = 0;

    loop {
        let grad_x = (&qx - r) * two;
        if residual_from_gradient(&x, &grad_x, damping) <= certificate_threshold(tol, &qx, r) {
            break;
        }
        if iterations >= budget {
            let best = finish(q, r, damping, x, iterations, QpMethod::ProjectedGradient);
            return Err(no_convergence(&best));
        }
        iterations += 1;

        let grad_y = (&qy - r) * two;
        let next = project_damped_cone(&(&y - grad_y * step), damping);
        let q_next = q * &next;
        let f_next = next.dot(&q_next) - two * r.dot(&next);

        if f_next > fx && momentum > T::one() {
            // Momentum overshot: restart from the last accepted point.
            momentum = T::one();
            y = x.clone();
            qy = qx.clone();
            continue;
        }

        let stalled = (&next - &x).amax() == T::zero();
        let momentum_next =
            (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) / two;
        let beta = (momentum - T::one()) / momentum_next;
        y = &next + (&next - &x) * beta;
        qy = &q_next + (&q_next - &qx) * beta;
        x = next;
        qx = q_next;
        fx = f_next;
        momentum = momentum_next;

        if stalled && beta == T::zero() {
            // A plain gradient step no longer moves the iterate; the
            // certificate check above decides on the next pass.
            let grad = (&qx - r) * two;
            if residual_from_gradient(&x, &grad, damping) > certificate_threshold(tol, &qx, r) {
                let best = finish(q, r, damping, x, iterations, QpMethod::ProjectedGradient);
                return Err(no_convergence(&best));
            }
        }
    }
    Ok(finish(q, r, damping, x, iterations, QpMethod::ProjectedGradient))
}

/// Exact active-set solve over the cone generators.
///
/// Every feasible λ is `Σ_j d_j g_j` with `d ≥ 0` and generators
/// `(g_j)_i = ξ^{-i}` for `i ≤ j` (zero below), which turns the problem into a
/// nonnegative QP in `d`, solved with Lawson–Hanson. If the resulting λ fails
/// the KKT certificate it is polished by [`solve`]'s projected gradient.
pub fn solve_active_set<T: Real>(
    q: &DMatrix<T>,
    r: &DVector<T>,
    damping: T,
    options: &QpOptions,
) -> Result<QpSolution<T>> {
    validate(q, r, damping)?;
    let dim = r.len();
    if dim == 0 {
        return Ok(finish(q, r, damping, DVector::zeros(0), 0, QpMethod::ActiveSet));
    }
    let tol = T::lit(options.tol);
    let inv = T::one() / damping;
    let decay: Vec<T> = std::iter::successors(Some(T::one()), |&p| Some(p * inv))
        .take(dim)
        .collect();

    // H = Gᵀ Q G and g = Gᵀ R via prefix sums over the generator structure.
    let mut qg = DMatrix::<T>::zeros(dim, dim);
    let mut acc = DVector::<T>::zeros(dim);
    for j in 0..dim {
        acc += q.column(j) * decay[j];
        qg.set_column(j, &acc);
    }
    let mut h = DMatrix::<T>::zeros(dim, dim);
    let mut row_acc = nalgebra::RowDVector::<T>::zeros(dim);
    for i in 0..dim {
        row_acc += qg.row(i) * decay[i];
        h.set_row(i, &row_acc);
    }
    let h = (&h + h.transpose()) * T::lit(0.5);
    let mut g = DVector::<T>::zeros(dim);
    let mut running = T::zero();
    for j in 0..dim {
        running += r[j] * decay[j];
        g[j] = running;
    }

    let (d, iterations) = lawson_hanson(&h, &g, tol, options.iteration_budget(dim));

    // λ_i = ξ^{-i} Σ_{j ≥ i} d_j.
    let mut point = DVector::<T>::zeros(dim);
    let mut tail = T::zero();
    for i in (0..dim).rev() {
        tail += d[i];
        point[i] = decay[i] * tail;
    }
    let point = project_damped_cone(&point, damping);
    let solution = finish(q, r, damping, point, iterations, QpMethod::ActiveSet);
    let qx = q * &solution.point;
    if solution.kkt_residual <= certificate_threshold(tol, &qx, r) {
        return Ok(solution);
    }
    log::debug!(
        "active-set KKT residual {:e} above threshold; polishing with projected gradient",
        solution.kkt_residual.as_f64()
    );
    match projected_gradient(q, r, damping, options, Some(solution.point.clone())) {
        Ok(mut polished) => {
            polished.iterations += iterations;
            Ok(polished)
        }
        Err(DglError::QpNoConvergence {
            best_objective,
            ..
        }) if best_objective > solution.objective.as_f64() => Err(no_convergence(&solution)),
        Err(err) => Err(err),
    }
}

/// Lawson–Hanson for `min dᵀHd − 2gᵀd, d ≥ 0` with `H` symmetric PSD.
fn lawson_hanson<T: Real>(h: &DMatrix<T>, g: &DVector<T>, tol: T, budget: usize) -> (DVector<T>, usize) {
    let n = g.len();
    let mut d = DVector::<T>::zeros(n);
    let mut passive: Vec<usize> = Vec::new();
    let mut blocked = vec![false; n];
    let threshold = tol * (T::one() + g.amax());
    let mut iterations = 0;

    while iterations < budget {
        let w = g - h * &d;
        let candidate = (0..n)
            .filter(|&j| !blocked[j] && !passive.contains(&j) && w[j] > threshold)
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(entering) = candidate else { break };
        passive.push(entering);

        let mut first_inner = true;
        loop {
            iterations += 1;
            let z = solve_passive(h, g, &passive);
            if z.iter().all(|&v| v > T::zero()) {
                for (k, &j) in passive.iter().enumerate() {
                    d[j] = z[k];
                }
                blocked.fill(false);
                break;
            }
            if first_inner && z[passive.len() - 1] <= T::zero() {
                // The entering generator cannot take a positive weight
                // (numerically dependent on the passive set); skip it.
                passive.pop();
                blocked[entering] = true;
                break;
            }
            first_inner = false;
            let mut alpha = T::one();
            for (k, &j) in passive.iter().enumerate() {
                if z[k] <= T::zero() {
                    let denom = d[j] - z[k];
                    if denom > T::zero() {
                        alpha = alpha.min(d[j] / denom);
                    }
                }
            }
            for (k, &j) in passive.iter().enumerate() {
                let dj = d[j];
                d[j] = dj + alpha * (z[k] - dj);
            }
            let tiny = T::epsilon() * T::lit(16.0) * (T::one() + d.amax());
            passive.retain(|&j| {
                if d[j] <= tiny {
                    d[j] = T::zero();
                    false
                } else {
                    true
                }
            });
            if passive.is_empty() || iterations >= budget {
                break;
            }
        }
    }
    (d, iterations)
}

fn solve_passive<T: Real>(h: &DMatrix<T>, g: &DVector<T>, passive: &[usize]) -> DVector<T> {
    let k = passive.len();
    let sub = DMatrix::from_fn(k, k, |a, b| h[(passive[a], passive[b])]);
    let rhs = DVector::from_fn(k, |a, _| g[passive[a]]);
    if let Some(chol) = sub.clone().cholesky() {
        return chol.solve(&rhs);
    }
    let svd = sub.svd(true, true);
    let cutoff = svd.singular_values.max() * T::epsilon() * T::lit(k as f64);
    svd.solve(&rhs, cutoff)
        .unwrap_or_else(|_| DVector::zeros(k))
}
