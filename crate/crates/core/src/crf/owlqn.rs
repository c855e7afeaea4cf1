//! Orthant-wise limited-memory quasi-Newton minimization of
//! `f(x) = smooth(x) + c1·‖x‖₁`.
//!
//! Plain L-BFGS cannot handle the non-smooth penalty; this variant steers
//! the quasi-Newton direction with a pseudo-gradient, confines each line
//! search to one orthant, and projects trial points back onto it, so
//! weights reach exactly zero. Accepted steps strictly decrease the
//! objective, which the training contract exposes as a monotone trace.

use std::collections::VecDeque;

use super::CrfError;

pub(crate) struct OwlqnParams {
    pub c1: f64,
    pub memory: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

#[derive(Debug)]
pub(crate) struct OwlqnOutcome {
    pub x: Vec<f64>,
    /// Objective value at start and after every accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_LINE_SEARCH: usize = 60;

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pseudo-gradient of the full objective: the steepest-descent direction
/// sign-consistent with the L1 term. Zero components mean the objective
/// cannot be decreased by moving that coordinate.
fn pseudo_gradient(x: &[f64], g: &[f64], c1: f64) -> Vec<f64> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if xi != 0.0 {
                gi + c1 * sign(xi)
            } else if gi + c1 < 0.0 {
                gi + c1
            } else if gi - c1 > 0.0 {
                gi - c1
            } else {
                0.0
            }
        })
        .collect()
}

/// Two-loop recursion: approximates `-H⁻¹·pg` from the stored curvature
/// pairs (gradient differences of the smooth part only).
fn two_loop(history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, pg: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = pg.iter().map(|v| -v).collect();
    if history.is_empty() {
        return q;
    }
    let mut alphas = vec![0.0; history.len()];
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alphas[i] = a;
        for (qj, yj) in q.iter_mut().zip(y) {
            *qj -= a * yj;
        }
    }
    let (s_last, y_last, _) = history.back().unwrap();
    let gamma = dot(s_last, y_last) / dot(y_last, y_last);
    for qj in &mut q {
        *qj *= gamma;
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let b = rho * dot(y, &q);
        for (qj, sj) in q.iter_mut().zip(s) {
            *qj += (alphas[i] - b) * sj;
        }
    }
    q
}

/// Minimizes `smooth(x) + c1·‖x‖₁` starting from zero.
///
/// `smooth` evaluates the smooth part and writes its gradient into the
/// provided buffer; `diagnose` renders a weight index for error messages.
pub(crate) fn minimize<F>(
    mut smooth: F,
    n: usize,
    params: &OwlqnParams,
    diagnose: &dyn Fn(usize) -> String,
) -> Result<OwlqnOutcome, CrfError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64, CrfError>,
{
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut f = smooth(&x, &mut g)? + params.c1 * l1_norm(&x);
    check_finite(f, &g, &x, diagnose)?;
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..params.max_iterations {
        let pg = pseudo_gradient(&x, &g, params.c1);
        let pg_max = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if pg_max < 1e-12 {
            converged = true;
            break;
        }
        let mut d = two_loop(&history, &pg);
        // the direction must stay sign-consistent with the steepest descent
        for (dj, pgj) in d.iter_mut().zip(&pg) {
            if *dj * *pgj >= 0.0 {
                *dj = 0.0;
            }
        }
        if d.iter().all(|v| *v == 0.0) {
            converged = true;
            break;
        }
        // orthant to search in
        let xi: Vec<f64> = x
            .iter()
            .zip(&pg)
            .map(|(&xj, &pgj)| if xj != 0.0 { sign(xj) } else { sign(-pgj) })
            .collect();
        let mut step = if history.is_empty() {
            1.0 / dot(&d, &d).sqrt()
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..MAX_LINE_SEARCH {
            for j in 0..n {
                let v = x[j] + step * d[j];
                x_new[j] = if v * xi[j] <= 0.0 { 0.0 } else { v };
            }
            let smooth_new = smooth(&x_new, &mut g_new)?;
            f_new = smooth_new + params.c1 * l1_norm(&x_new);
            if f_new.is_finite() {
                let dir_deriv: f64 = pg
                    .iter()
                    .zip(x_new.iter().zip(&x))
                    .map(|(pgj, (xn, xo))| pgj * (xn - xo))
                    .sum();
                if dir_deriv < 0.0 && f_new <= f + ARMIJO_C * dir_deriv {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            if !f_new.is_finite() {
                check_finite(f_new, &g_new, &x_new, diagnose)?;
            }
            // no step at machine precision improves the objective
            converged = true;
            break;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        let f_prev = f;
        f = f_new;
        trace.push(f);
        iterations += 1;
        let denom = f_prev.abs().max(f.abs()).max(1.0);
        if (f_prev - f).abs() / denom < params.tolerance {
            converged = true;
            break;
        }
    }

    Ok(OwlqnOutcome {
        x,
        trace,
        iterations,
        converged,
    })
}

fn check_finite(
    f: f64,
    g: &[f64],
    x: &[f64],
    diagnose: &dyn Fn(usize) -> String,
) -> Result<(), CrfError> {
    if f.is_finite() {
        return Ok(());
    }
    let index = g
        .iter()
        .position(|v| !v.is_finite())
        .or_else(|| {
            x.iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.abs().total_cmp(&b.abs()))
                .map(|(i, _)| i)
        })
        .unwrap_or(0);
    Err(CrfError::NonFiniteObjective {
        diagnostic: diagnose(index),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soft_threshold(a: f64, c: f64) -> f64 {
        if a > c {
            a - c
        } else if a < -c {
            a + c
        } else {
            0.0
        }
    }

    /// Quadratic with known L1 solution: argmin ½Σ(x−a)² + c‖x‖₁ is the
    /// coordinate-wise soft threshold of a.
    #[test]
    fn solves_separable_lasso_exactly() {
        let a = [3.0, -2.0, 0.5, 0.0, 10.0];
        let params = OwlqnParams {
            c1: 1.0,
            memory: 6,
            max_iterations: 200,
            tolerance: 1e-12,
        };
        let out = minimize(
            |x, g| {
                let mut f = 0.0;
                for j in 0..a.len() {
                    let d = x[j] - a[j];
                    f += 0.5 * d * d;
                    g[j] = d;
                }
                Ok(f)
            },
            a.len(),
            &params,
            &|i| format!("slot {i}"),
        )
        .unwrap();
        assert!(out.converged);
        for (j, &aj) in a.iter().enumerate() {
            let expected = soft_threshold(aj, 1.0);
            assert!(
                (out.x[j] - expected).abs() < 1e-6,
                "x[{j}] = {} expected {expected}",
                out.x[j]
            );
            if expected == 0.0 {
                assert_eq!(out.x[j], 0.0, "L1 must zero out x[{j}] exactly");
            }
        }
    }

    #[test]
    fn dominating_penalty_keeps_weights_at_zero() {
        let a = [0.3, -0.7];
        let params = OwlqnParams {
            c1: 1e6,
            memory: 6,
            max_iterations: 50,
            tolerance: 1e-9,
        };
        let out = minimize(
            |x, g| {
                let mut f = 0.0;
                for j in 0..a.len() {
                    let d = x[j] - a[j];
                    f += 0.5 * d * d;
                    g[j] = d;
                }
                Ok(f)
            },
            a.len(),
            &params,
            &|i| format!("slot {i}"),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.x, vec![0.0, 0.0]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn trace_is_strictly_decreasing_on_accepted_steps() {
        // Rosenbrock-ish smooth part with mild L1
        let params = OwlqnParams {
            c1: 0.1,
            memory: 6,
            max_iterations: 300,
            tolerance: 1e-10,
        };
        let out = minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = 2.0 * (a - 1.0) + 4.0 * a * (a * a - b);
                g[1] = -2.0 * (a * a - b);
                Ok((a - 1.0).powi(2) + (a * a - b).powi(2))
            },
            2,
            &params,
            &|i| format!("slot {i}"),
        )
        .unwrap();
        for pair in out.trace.windows(2) {
            assert!(pair[1] < pair[0], "trace must strictly decrease: {pair:?}");
        }
        assert!(out.trace.len() > 2);
    }

    #[test]
    fn non_finite_objective_is_diagnosed() {
        let params = OwlqnParams {
            c1: 0.0,
            memory: 6,
            max_iterations: 10,
            tolerance: 1e-9,
        };
        let err = minimize(
            |_x, g| {
                g[0] = f64::NAN;
                Ok(f64::NAN)
            },
            1,
            &params,
            &|i| format!("weight #{i}"),
        )
        .unwrap_err();
        assert!(matches!(err, CrfError::NonFiniteObjective { .. }));
        assert!(err.to_string().contains("weight #0"));
    }
}
