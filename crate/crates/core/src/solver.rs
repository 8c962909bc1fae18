//! Projected quasi-Newton minimization with lower bounds.
//!
//! Limited-memory BFGS with two-metric projection: variables sitting at
//! their lower bound with a gradient pushing further out form the active
//! set; the quasi-Newton direction is computed on the free variables and a
//! backtracking Armijo line search walks the projected arc. Designed for
//! smooth convex objectives over a box, which is all the M-step needs.

/// Outcome of a [`minimize_bounded`] run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Projected-gradient ∞-norm satisfied `tol` before the iteration cap.
    pub converged: bool,
}

/// Objective interface: value and gradient at a feasible point.
pub trait Objective {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>);
    /// Value-only evaluation, used inside the line search.
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).0
    }
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self(x)
    }
}

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const BOUND_EPS: f64 = 1e-12;

fn project(x: &mut [f64], lower: &[f64]) {
    for (xi, &lb) in x.iter_mut().zip(lower) {
        if *xi < lb {
            *xi = lb;
        }
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64]) -> f64 {
    let mut norm: f64 = 0.0;
    for i in 0..x.len() {
        let at_bound = x[i] - lower[i] <= BOUND_EPS;
        let pg = if at_bound { g[i].min(0.0) } else { g[i] };
        norm = norm.max(pg.abs());
    }
    norm
}

/// Minimizes `objective` over `{ x : x ≥ lower }` starting from `x0`.
///
/// Stops when the projected-gradient ∞-norm drops below `tol` or after
/// `max_iter` iterations, whichever comes first; the best iterate found is
/// returned either way.
pub fn minimize_bounded(
    objective: &dyn Objective,
    x0: &[f64],
    lower: &[f64],
    max_iter: usize,
    tol: f64,
) -> SolveResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower);
    let (mut f, mut g) = objective.eval(&x);

    // L-BFGS memory.
    let mut s_mem: Vec<Vec<f64>> = Vec::new();
    let mut y_mem: Vec<Vec<f64>> = Vec::new();
    let mut rho_mem: Vec<f64> = Vec::new();

    let mut iterations = 0;
    let mut converged = projected_gradient_norm(&x, &g, lower) < tol;

    while !converged && iterations < max_iter {
        iterations += 1;
        let active: Vec<bool> = (0..n)
            .map(|i| x[i] - lower[i] <= BOUND_EPS && g[i] > 0.0)
            .collect();

        // Two-loop recursion on the free subspace.
        let mut q: Vec<f64> = (0..n).map(|i| if active[i] { 0.0 } else { -g[i] }).collect();
        let k = s_mem.len();
        let mut alpha = vec![0.0; k];
        for j in (0..k).rev() {
            let a = rho_mem[j] * dot(&s_mem[j], &q);
            alpha[j] = a;
            axpy(&mut q, -a, &y_mem[j]);
        }
        if k > 0 {
            let sy = dot(&s_mem[k - 1], &y_mem[k - 1]);
            let yy = dot(&y_mem[k - 1], &y_mem[k - 1]);
            if yy > 0.0 && sy > 0.0 {
                let h0 = sy / yy;
                for qi in q.iter_mut() {
                    *qi *= h0;
                }
            }
        }
        for j in 0..k {
            let b = rho_mem[j] * dot(&y_mem[j], &q);
            axpy(&mut q, alpha[j] - b, &s_mem[j]);
        }
        for i in 0..n {
            if active[i] {
                q[i] = 0.0;
            }
        }

        // Fall back to projected steepest descent when the direction fails.
        let mut dir = q;
        if dot(&dir, &g) >= 0.0 {
            dir = (0..n).map(|i| if active[i] { 0.0 } else { -g[i] }).collect();
            s_mem.clear();
            y_mem.clear();
            rho_mem.clear();
        }

        // Backtracking Armijo search along the projected arc, with quadratic
        // interpolation of the step size.
        let mut step = if s_mem.is_empty() {
            let gmax = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if gmax > 1.0 {
                1.0 / gmax
            } else {
                1.0
            }
        } else {
            1.0
        };
        let mut accepted = false;
        let mut x_new = vec![0.0; n];
        let mut f_new = f;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            project(&mut x_new, lower);
            let predicted: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            if predicted >= 0.0 {
                // Projection removed all descent at this step size.
                step *= 0.5;
                continue;
            }
            f_new = objective.value(&x_new);
            if f_new.is_finite() && f_new <= f + ARMIJO_C1 * predicted {
                accepted = true;
                break;
            }
            // Minimizer of the quadratic through (0, f), slope `predicted`,
            // and (step, f_new), clamped to a sane backtracking window.
            let denom = 2.0 * (f_new - f - predicted);
            let interp = if denom > 0.0 && f_new.is_finite() {
                -predicted * step / denom
            } else {
                0.5 * step
            };
            step = interp.clamp(0.1 * step, 0.5 * step);
        }
        if !accepted {
            break;
        }

        let (_, g_new) = objective.eval(&x_new);
        let s_vec: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y_vec: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-10 {
            if s_mem.len() == MEMORY {
                s_mem.remove(0);
                y_mem.remove(0);
                rho_mem.remove(0);
            }
            rho_mem.push(1.0 / sy);
            s_mem.push(s_vec);
            y_mem.push(y_vec);
        }
        x = x_new;
        f = f_new;
        g = g_new;
        converged = projected_gradient_norm(&x, &g, lower) < tol;
    }

    SolveResult {
        x,
        value: f,
        iterations,
        converged,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic {
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
            let f = x
                .iter()
                .zip(&self.center)
                .map(|(xi, ci)| 0.5 * (xi - ci) * (xi - ci))
                .sum();
            let g = x.iter().zip(&self.center).map(|(xi, ci)| xi - ci).collect();
            (f, g)
        }
    }

    #[test]
    fn unconstrained_quadratic_reaches_center() {
        let obj = Quadratic {
            center: vec![1.0, -2.0, 3.5],
        };
        let res = minimize_bounded(&obj, &[0.0; 3], &[f64::NEG_INFINITY; 3], 100, 1e-10);
        assert!(res.converged);
        for (xi, ci) in res.x.iter().zip(&obj.center) {
            assert!((xi - ci).abs() < 1e-8);
        }
    }

    #[test]
    fn bound_clamps_negative_center() {
        let obj = Quadratic {
            center: vec![-1.0, 2.0],
        };
        let res = minimize_bounded(&obj, &[0.5, 0.5], &[0.0, 0.0], 100, 1e-10);
        assert!(res.converged);
        assert_eq!(res.x[0], 0.0);
        assert!((res.x[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn rosenbrock_under_bounds() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let res = minimize_bounded(&rosen, &[-1.2, 1.0], &[-2.0, -2.0], 500, 1e-8);
        assert!(res.converged, "iterations {}", res.iterations);
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            (f, g)
        };
        let res = minimize_bounded(&rosen, &[-1.2, 1.0], &[-2.0, -2.0], 3, 1e-12);
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
    }
}
