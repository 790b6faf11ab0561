//! Derivative-free root finding and small-scale smooth minimization.
//!
//! Everything here is deterministic and allocation-light; these routines back
//! the margin-removal solvers, the implied-goals extractor and the MAP
//! estimator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("root not bracketed on [{a}, {b}]: f(a)={fa:.6e}, f(b)={fb:.6e}")]
    RootNotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("solver failed to converge: {0}")]
    NoConvergence(String),
}

#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Brent's method: inverse-quadratic/secant steps secured by bisection.
/// Requires a sign change over [a, b].
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult, OptimError> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(RootResult { root: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { root: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(OptimError::RootNotBracketed { a, b, fa, fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(RootResult { root: b, residual: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // attempt inverse quadratic interpolation / secant
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Err(OptimError::NoConvergence(format!(
        "brent_root: no convergence after {max_iter} iterations, last x={b:.6e}"
    )))
}

/// Golden-section search for the minimum of a unimodal function on [a, b].
/// Returns (argmin, min).
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if f1 <= f2 && f1 <= fm {
        (x1, f1)
    } else if f2 <= fm {
        (x2, f2)
    } else {
        (xm, fm)
    }
}

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-9, f_tol: 1e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_inf_norm: f64,
}

/// Box-constrained BFGS with projected line search. The objective closure
/// returns the value and the gradient at a point inside the box.
pub fn minimize_bounded<F>(
    mut f_grad: F,
    x0: &[f64],
    bounds: &Bounds,
    opts: &MinimizeOptions,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut fx, mut g) = f_grad(&x);
    // inverse Hessian approximation
    let mut h = identity(dim);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_inf_norm = projected_grad_norm(&x, &g, bounds);

    for iter in 1..=opts.max_iter {
        iterations = iter;
        grad_inf_norm = projected_grad_norm(&x, &g, bounds);
        if grad_inf_norm < opts.grad_tol {
            converged = true;
            break;
        }
        // search direction, zeroing components pinned at an active bound
        let mut d = mat_vec_neg(&h, &g);
        for i in 0..dim {
            let at_lower = x[i] <= bounds.lower[i] && d[i] < 0.0;
            let at_upper = x[i] >= bounds.upper[i] && d[i] > 0.0;
            if at_lower || at_upper {
                d[i] = 0.0;
            }
        }
        let descent: f64 = d.iter().zip(&g).map(|(di, gi)| di * gi).sum();
        if descent >= 0.0 {
            // fall back to projected steepest descent
            for i in 0..dim {
                d[i] = -g[i];
                let at_lower = x[i] <= bounds.lower[i] && d[i] < 0.0;
                let at_upper = x[i] >= bounds.upper[i] && d[i] > 0.0;
                if at_lower || at_upper {
                    d[i] = 0.0;
                }
            }
            h = identity(dim);
        }

        // backtracking line search with projection onto the box
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut x_new = x.clone();
        let mut f_new = fx;
        let mut g_new = g.clone();
        for _ in 0..60 {
            for i in 0..dim {
                x_new[i] = x[i] + alpha * d[i];
            }
            bounds.project(&mut x_new);
            let step_dot_g: f64 =
                x_new.iter().zip(&x).zip(&g).map(|((xn, xo), gi)| (xn - xo) * gi).sum();
            if step_dot_g >= 0.0 {
                // projection removed all descent; shrink
                alpha *= 0.5;
                continue;
            }
            let (fv, gv) = f_grad(&x_new);
            if fv <= fx + 1e-4 * step_dot_g {
                f_new = fv;
                g_new = gv;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no progress possible along this direction
            converged = grad_inf_norm < 1e-5;
            break;
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let s_norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm = yv.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-10 * s_norm * y_norm {
            bfgs_update(&mut h, &s, &yv, sy);
        }

        let f_prev = fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        if (f_prev - fx).abs() <= opts.f_tol * (fx.abs() + 1.0) {
            converged = true;
            grad_inf_norm = projected_grad_norm(&x, &g, bounds);
            break;
        }
    }
    MinimizeResult { x, value: fx, converged, iterations, grad_inf_norm }
}

/// Central finite differences, step scaled per coordinate.
pub fn numeric_grad<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 6e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_vec_neg(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| -row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn projected_grad_norm(x: &[f64], g: &[f64], bounds: &Bounds) -> f64 {
    let mut norm = 0.0f64;
    for i in 0..x.len() {
        let pinned_low = x[i] <= bounds.lower[i] && g[i] > 0.0;
        let pinned_high = x[i] >= bounds.upper[i] && g[i] < 0.0;
        if !(pinned_low || pinned_high) {
            norm = norm.max(g[i].abs());
        }
    }
    norm
}

/// BFGS inverse-Hessian update: H <- (I - s yᵀ/sy) H (I - y sᵀ/sy) + s sᵀ/sy.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let dim = s.len();
    let rho = 1.0 / sy;
    // hy = H y
    let hy: Vec<f64> = h.iter().map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..dim {
        for j in 0..dim {
            h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
