//! Reference solvers written directly from the optimization problems the
//! learners solve in closed form.

use nalgebra::{DMatrix, DVector};

/// `min 0.5 z'Hz + g'z  s.t.  A z >= b` by enumerating active sets. Only
/// meant for a handful of constraints. Returns `None` if no KKT point exists.
pub fn qp_active_set(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = h.nrows();
    let m = a.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = active.len();
        // [H  -A_S'] [z]   [-g ]
        // [A_S   0 ] [l] = [b_S]
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(h);
        rhs.rows_mut(0, n).copy_from(&(-g));
        for (r, &i) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + r, j)] = a[(i, j)];
                kkt[(j, n + r)] = -a[(i, j)];
            }
            rhs[n + r] = b[i];
        }
        let lu = kkt.lu();
        if lu.determinant().abs() < 1e-300 {
            continue;
        }
        let Some(sol) = lu.solve(&rhs) else { continue };
        let z = sol.rows(0, n).into_owned();
        let multipliers_ok = (0..k).all(|r| sol[n + r] >= -1e-12);
        let feasible = (0..m).all(|i| (a.row(i) * &z)[0] >= b[i] - 1e-10);
        if !(multipliers_ok && feasible) {
            continue;
        }
        let obj = 0.5 * z.dot(&(h * &z)) + g.dot(&z);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, z));
        }
    }
    best.map(|(_, z)| z)
}

/// `argmin_w 0.5|w - w0|^2  s.t.  y w'x >= 1`.
pub fn pa_solve(w0: &DVector<f64>, x: &DVector<f64>, y: f64) -> DVector<f64> {
    let n = w0.len();
    let a = DMatrix::from_row_slice(1, n, (x * y).as_slice());
    qp_active_set(&DMatrix::identity(n, n), &(-w0), &a, &DVector::from_element(1, 1.0))
        .expect("feasible")
}

/// `argmin_w 0.5|w - w0|^2 + C xi  s.t.  y w'x >= 1 - xi, xi >= 0`.
pub fn pa1_solve(w0: &DVector<f64>, x: &DVector<f64>, y: f64, c: f64) -> DVector<f64> {
    let n = w0.len();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut g = DVector::zeros(n + 1);
    g.rows_mut(0, n).copy_from(&(-w0));
    g[n] = c;
    let mut a = DMatrix::zeros(2, n + 1);
    for j in 0..n {
        a[(0, j)] = y * x[j];
    }
    a[(0, n)] = 1.0;
    a[(1, n)] = 1.0;
    let b = DVector::from_vec(vec![1.0, 0.0]);
    qp_active_set(&h, &g, &a, &b).expect("feasible").rows(0, n).into_owned()
}

/// `argmin_w 0.5|w - w0|^2 + C xi^2  s.t.  y w'x >= 1 - xi`.
pub fn pa2_solve(w0: &DVector<f64>, x: &DVector<f64>, y: f64, c: f64) -> DVector<f64> {
    let n = w0.len();
    let mut h = DMatrix::identity(n + 1, n + 1);
    h[(n, n)] = 2.0 * c;
    let mut g = DVector::zeros(n + 1);
    g.rows_mut(0, n).copy_from(&(-w0));
    let mut a = DMatrix::zeros(1, n + 1);
    for j in 0..n {
        a[(0, j)] = y * x[j];
    }
    a[(0, n)] = 1.0;
    qp_active_set(&h, &g, &a, &DVector::from_element(1, 1.0))
        .expect("feasible")
        .rows(0, n)
        .into_owned()
}

/// Penalty on the confidence constraint `y mu'x >= phi sqrt(x'Sigma x)`.
#[derive(Debug, Clone, Copy)]
pub enum Confidence {
    /// Hard constraint.
    Exact,
    /// `C * max(0, phi sqrt(v) - m)`.
    Linear(f64),
    /// `C * max(0, phi sqrt(v) - m)^2`.
    Squared(f64),
}

/// `KL(N(mu, S) || N(mu0, S0))`.
pub fn kl(mu: &DVector<f64>, s: &DMatrix<f64>, mu0: &DVector<f64>, s0: &DMatrix<f64>) -> f64 {
    let d = mu.len() as f64;
    let s0_inv = s0.clone().try_inverse().expect("invertible");
    let dm = mu0 - mu;
    let ld0 = s0.clone().cholesky().expect("pd").l().diagonal().map(f64::ln).sum() * 2.0;
    let ld = s.clone().cholesky().expect("pd").l().diagonal().map(f64::ln).sum() * 2.0;
    0.5 * (ld0 - ld + (&s0_inv * s).trace() + dm.dot(&(&s0_inv * &dm)) - d)
}

/// Objective of the confidence-weighted problems; infinite when the hard
/// constraint is violated or the covariance is not positive definite.
pub fn confidence_objective(
    mu: &DVector<f64>,
    s: &DMatrix<f64>,
    mu0: &DVector<f64>,
    s0: &DMatrix<f64>,
    x: &DVector<f64>,
    y: f64,
    phi: f64,
    kind: Confidence,
) -> f64 {
    if s.clone().cholesky().is_none() {
        return f64::INFINITY;
    }
    let gap = phi * x.dot(&(s * x)).sqrt() - y * mu.dot(x);
    let penalty = match kind {
        Confidence::Exact if gap > 1e-12 => return f64::INFINITY,
        Confidence::Exact => 0.0,
        Confidence::Linear(c) => c * gap.max(0.0),
        Confidence::Squared(c) => c * gap.max(0.0).powi(2),
    };
    kl(mu, s, mu0, s0) + penalty
}

fn bisect(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the confidence-weighted problem for `(mu0, S0, x, y)`.
///
/// The optimum changes `mu` only along `S0 x` and `S` only by a rank-one
/// term in `S0 x`, so the problem reduces to the new margin `m = y mu'x`
/// and deviation `s = sqrt(x'Sx)`:
///
/// `0.5 (m - m0)^2 / v0 + 0.5 (s^2/v0 - 1 - ln(s^2/v0)) + penalty(phi s - m)`.
///
/// For fixed `s` the best `m` is explicit; the outer problem is convex in
/// `s` and solved by bisection on its derivative.
pub fn confidence_solve(
    mu0: &DVector<f64>,
    s0: &DMatrix<f64>,
    x: &DVector<f64>,
    y: f64,
    phi: f64,
    kind: Confidence,
) -> (DVector<f64>, DMatrix<f64>) {
    let sx = s0 * x;
    let v0 = x.dot(&sx);
    let m0 = y * mu0.dot(x);
    // best margin for a given s, and the marginal price of raising phi*s
    let inner = |s: f64| -> (f64, f64) {
        let target = phi * s;
        if m0 >= target {
            return (m0, 0.0);
        }
        match kind {
            Confidence::Exact => (target, (target - m0) / v0),
            Confidence::Linear(c) => {
                if m0 + c * v0 >= target {
                    (target, (target - m0) / v0)
                } else {
                    (m0 + c * v0, c)
                }
            }
            Confidence::Squared(c) => {
                let m = (m0 + 2.0 * c * v0 * target) / (1.0 + 2.0 * c * v0);
                (m, 2.0 * c * (target - m))
            }
        }
    };
    let dfds = |s: f64| s / v0 - 1.0 / s + phi * inner(s).1;
    let s = bisect(1e-300, v0.sqrt(), dfds);
    let (m, _) = inner(s);
    let mu = mu0 + &sx * (y * (m - m0) / v0);
    let sigma = s0 + &sx * sx.transpose() * ((s * s - v0) / (v0 * v0));
    (mu, sigma)
}
