//! Limited-memory BFGS ascent with Armijo backtracking. After every accepted
//! step the iterate is rescaled to `Tr(T†T) = 1`; along a ray the
//! log-likelihood peaks exactly there, so the rescaling never lowers it.

use std::collections::VecDeque;

use crate::error::Result;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_unit_trace(x: &mut [f64]) {
    let s = dot(x, x).sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

/// Two-loop recursion on the ascent gradient; returns an ascent direction.
fn direction(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    // work with the descent problem on -L: gradient q = -g
    let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Maximizes `f` where `fg` returns `(f, ∇f)`.
pub fn projected_lbfgs<F>(mut fg: F, x0: &[f64], ftol: f64, max_iter: usize) -> Result<AscentOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    to_unit_trace(&mut x);
    let (mut fx, mut gx) = fg(&x)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut quiet = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut d = direction(&gx, &mem);
        let mut slope = dot(&gx, &d);
        if mem.is_empty() || slope <= 0.0 || !slope.is_finite() {
            mem.clear();
            let gn = dot(&gx, &gx).sqrt();
            let scale = if gn > 0.0 { (0.1 / gn).min(1.0) } else { 0.0 };
            d = gx.iter().map(|v| v * scale).collect();
            slope = dot(&gx, &d);
        }
        if slope <= 0.0 {
            converged = true;
            history.push(fx);
            break;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            to_unit_trace(&mut xn);
            if let Ok((fnew, gnew)) = fg(&xn) {
                if fnew.is_finite() && fnew >= fx + ARMIJO * step * slope {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            if mem.is_empty() {
                // steepest ascent cannot improve: numerically stationary
                converged = true;
                history.push(fx);
                break;
            }
            mem.clear();
            history.push(fx);
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gx.iter().zip(&gnew).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if mem.len() == MEMORY {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        let change = 2.0 * (fnew - fx).abs() / (fnew.abs() + fx.abs() + 1e-300);
        x = xn;
        fx = fnew;
        gx = gnew;
        history.push(fx);
        quiet = if change < ftol { quiet + 1 } else { 0 };
        if quiet >= 3 {
            converged = true;
            break;
        }
    }

    Ok(AscentOutcome {
        x,
        value: fx,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_log_on_the_sphere() {
        // Σ wᵢ ln xᵢ² - N|x|², N = Σwᵢ: optimum xᵢ² = wᵢ/N
        let w = [3.0, 1.0, 4.0, 2.0];
        let n: f64 = w.iter().sum();
        let out = projected_lbfgs(
            |x| {
                let f = w.iter().zip(x).map(|(wi, xi)| wi * (xi * xi).ln()).sum::<f64>() - n * dot(x, x);
                let g = w.iter().zip(x).map(|(wi, xi)| 2.0 * wi / xi - 2.0 * n * xi).collect();
                Ok((f, g))
            },
            &[0.5; 4],
            1e-14,
            500,
        )
        .unwrap();
        assert!(out.converged);
        for (xi, wi) in out.x.iter().zip(&w) {
            assert!((xi * xi - wi / n).abs() < 1e-6, "{:?}", out.x);
        }
        assert!(out.history.windows(2).all(|p| p[1] >= p[0]));
    }
}
