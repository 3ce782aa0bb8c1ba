//! Limited-memory BFGS with backtracking (Armijo) line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `(f_prev - f) / |f_prev|` drops below this.
    pub epsilon: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
    /// The per-iteration callback asked to stop.
    Interrupted,
}

#[derive(Debug)]
pub(crate) enum Failure<E> {
    Objective(E),
    NonFinite { iteration: usize, value: f64 },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x`. `f` writes the gradient into its second argument
/// and returns the objective. `on_iteration(k, x, fx)` runs after every
/// accepted step and may return `false` to stop. Returns the final point and
/// iterations taken.
pub(crate) fn minimize<E>(
    mut x: Vec<f64>,
    config: LbfgsConfig,
    mut f: impl FnMut(&[f64], &mut [f64]) -> Result<f64, E>,
    mut on_iteration: impl FnMut(usize, &[f64], f64) -> bool,
) -> Result<(Vec<f64>, usize, StopReason), Failure<E>> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g).map_err(Failure::Objective)?;
    if !fx.is_finite() {
        return Err(Failure::NonFinite {
            iteration: 0,
            value: fx,
        });
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut alpha = vec![0.0; config.memory];

    for k in 1..=config.max_iterations {
        // Two-loop recursion: d = -H g.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        for (j, (s, y, rho)) in history.iter().enumerate().rev() {
            alpha[j] = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= alpha[j] * yi;
            }
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for (j, (s, y, rho)) in history.iter().enumerate() {
            let beta = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (alpha[j] - beta) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        if slope == 0.0 {
            return Ok((x, k - 1, StopReason::Converged));
        }

        let mut step = if history.is_empty() {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = f(&x_new, &mut g_new).map_err(Failure::Objective)?;
            if f_new.is_nan() {
                return Err(Failure::NonFinite {
                    iteration: k,
                    value: f_new,
                });
            }
            if f_new.is_finite() && f_new <= fx + ARMIJO_C1 * step * slope {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            return Ok((x, k - 1, StopReason::LineSearchFailed));
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let relative = (fx - f_new) / fx.abs().max(f64::MIN_POSITIVE);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        if !on_iteration(k, &x, fx) {
            return Ok((x, k, StopReason::Interrupted));
        }
        if relative < config.epsilon {
            return Ok((x, k, StopReason::Converged));
        }
    }
    Ok((x, config.max_iterations, StopReason::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> Result<f64, ()> {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        Ok((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2))
    }

    #[test]
    fn minimizes_rosenbrock() {
        let config = LbfgsConfig {
            memory: 6,
            max_iterations: 500,
            epsilon: 1e-14,
        };
        let mut objectives = vec![];
        let (x, _, _) = minimize(vec![-1.2, 1.0], config, rosenbrock, |_, _, f| {
            objectives.push(f);
            true
        })
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-4, "{x:?}");
        assert!((x[1] - 1.0).abs() < 1e-4, "{x:?}");
        assert!(objectives.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_converges_quickly() {
        let config = LbfgsConfig {
            memory: 4,
            max_iterations: 100,
            epsilon: 1e-12,
        };
        let (x, iters, reason) = minimize(
            vec![3.0, -4.0, 1.0],
            config,
            |x: &[f64], g: &mut [f64]| -> Result<f64, ()> {
                let scale = [1.0, 10.0, 0.1];
                // Offset keeps the relative-change test meaningful near the minimum.
                let mut f = 1.0;
                for i in 0..3 {
                    g[i] = scale[i] * x[i];
                    f += 0.5 * scale[i] * x[i] * x[i];
                }
                Ok(f)
            },
            |_, _, _| true,
        )
        .unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-4), "{x:?}");
        assert!(iters < 100);
        assert_ne!(reason, StopReason::MaxIterations);
    }

    #[test]
    fn one_iteration_cap() {
        let config = LbfgsConfig {
            memory: 4,
            max_iterations: 1,
            epsilon: 1e-30,
        };
        let mut calls = 0;
        let (_, iters, reason) = minimize(vec![-1.2, 1.0], config, rosenbrock, |_, _, _| {
            calls += 1;
            true
        })
        .unwrap();
        assert_eq!((iters, calls), (1, 1));
        assert_eq!(reason, StopReason::MaxIterations);
    }
}
