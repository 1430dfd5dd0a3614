//! Projected limited-memory quasi-Newton descent on a box.

use std::collections::VecDeque;

use super::GlobalOptError;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((xi, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
        *xi = xi.clamp(l, u);
    }
}

/// `|| P(x - g) - x ||_inf`, the first-order optimality measure on a box.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&l, &u))| ((xi - gi).clamp(l, u) - xi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn evaluate<F>(f: &F, x: &[f64], g: &mut [f64]) -> Result<f64, GlobalOptError>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let v = f(x, g);
    if !v.is_finite() || g.iter().any(|gi| !gi.is_finite()) {
        return Err(GlobalOptError::NonFiniteObjective { point: x.to_vec() });
    }
    Ok(v)
}

pub(crate) fn minimize_local<F>(
    f: &F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<LocalResult, GlobalOptError>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = start.len();
    let mut x = start.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut fx = evaluate(f, &x, &mut g)?;

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];

    for _ in 0..max_iterations {
        if projected_gradient_norm(&x, &g, lower, upper) <= tolerance {
            return Ok(LocalResult {
                x,
                value: fx,
                converged: true,
            });
        }

        // Variables pinned at a bound by the gradient stay fixed this iteration.
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let pinned_low = x[i] <= lower[i] && g[i] > 0.0;
                let pinned_high = x[i] >= upper[i] && g[i] < 0.0;
                lower[i] < upper[i] && !pinned_low && !pinned_high
            })
            .collect();

        let mut accepted = false;
        for use_memory in [true, false] {
            if !use_memory && history.is_empty() {
                break;
            }
            // Two-loop recursion on the free subspace.
            for i in 0..n {
                dir[i] = if free[i] { g[i] } else { 0.0 };
            }
            if use_memory && !history.is_empty() {
                let mut alphas = Vec::with_capacity(history.len());
                for (s, y, rho) in history.iter().rev() {
                    let a = rho * masked_dot(s, &dir, &free);
                    for i in 0..n {
                        if free[i] {
                            dir[i] -= a * y[i];
                        }
                    }
                    alphas.push(a);
                }
                let (s, y, _) = history.back().expect("nonempty");
                let yy = masked_dot(y, y, &free);
                let gamma = if yy > 0.0 {
                    masked_dot(s, y, &free) / yy
                } else {
                    1.0
                };
                if gamma > 0.0 && gamma.is_finite() {
                    dir.iter_mut().for_each(|d| *d *= gamma);
                }
                for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                    let b = rho * masked_dot(y, &dir, &free);
                    for i in 0..n {
                        if free[i] {
                            dir[i] += (a - b) * s[i];
                        }
                    }
                }
            }
            dir.iter_mut().for_each(|d| *d = -*d);
            if dot(&dir, &g) >= 0.0 {
                continue;
            }
            let mut step = if use_memory && !history.is_empty() {
                1.0
            } else {
                let gmax = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                if gmax > 0.0 {
                    (0.1 / gmax).min(1.0)
                } else {
                    1.0
                }
            };
            for _ in 0..MAX_BACKTRACK {
                for i in 0..n {
                    x_new[i] = x[i] + step * dir[i];
                }
                project(&mut x_new, lower, upper);
                let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
                if decrease >= 0.0 {
                    step *= 0.5;
                    continue;
                }
                let f_new = evaluate(f, &x_new, &mut g_new)?;
                if f_new <= fx + ARMIJO * decrease {
                    accepted = true;
                    let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                    let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                        if history.len() == MEMORY {
                            history.pop_front();
                        }
                        history.push_back((s, y, 1.0 / sy));
                    }
                    std::mem::swap(&mut x, &mut x_new);
                    std::mem::swap(&mut g, &mut g_new);
                    fx = f_new;
                    break;
                }
                step *= 0.5;
            }
            if accepted {
                break;
            }
            history.clear();
        }
        if !accepted {
            // No descent possible at floating-point resolution.
            let converged = projected_gradient_norm(&x, &g, lower, upper) <= tolerance;
            return Ok(LocalResult {
                x,
                value: fx,
                converged,
            });
        }
    }
    let converged = projected_gradient_norm(&x, &g, lower, upper) <= tolerance;
    Ok(LocalResult {
        x,
        value: fx,
        converged,
    })
}

fn masked_dot(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((x, y), _)| x * y)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_in_box() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize_local(&f, &[-1.2, 1.0], &[-2.0, -2.0], &[2.0, 2.0], 1e-8, 500).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn active_bound() {
        // minimum of (x+1)^2 + (y-0.5)^2 over [0,1]^2 is (0, 0.5)
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] + 1.0);
            g[1] = 2.0 * (x[1] - 0.5);
            (x[0] + 1.0).powi(2) + (x[1] - 0.5).powi(2)
        };
        let r = minimize_local(&f, &[0.7, 0.9], &[0.0, 0.0], &[1.0, 1.0], 1e-8, 200).unwrap();
        assert!(r.converged);
        assert_eq!(r.x[0], 0.0);
        assert!((r.x[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn non_finite_is_an_error() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            if x[0] < 0.5 {
                f64::NAN
            } else {
                x[0]
            }
        };
        assert!(matches!(
            minimize_local(&f, &[1.0], &[0.0], &[1.0], 1e-8, 50),
            Err(GlobalOptError::NonFiniteObjective { .. })
        ));
    }
}
