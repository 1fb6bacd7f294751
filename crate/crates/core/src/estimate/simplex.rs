//! Nelder–Mead downhill simplex (maximizing form).
//!
//! Uses the dimension-adaptive coefficients of Gao and Han, which keep the
//! method from stalling as the parameter count grows.

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

pub(crate) fn relative_spread(hi: f64, lo: f64) -> f64 {
    2.0 * (hi - lo).abs() / (hi.abs() + lo.abs() + 1e-300)
}

/// Maximizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`. Stops when the relative spread of vertex values drops below
/// `ftol` or after `max_iter` iterations.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, ftol: f64, max_iter: usize) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    // internally minimize g = -f; NaN counts as worst
    let mut g = |x: &[f64]| {
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| g(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut history = Vec::new();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, second) = (order[0], order[n], order[n.saturating_sub(1)]);
        if iterations > 0 {
            history.push(-vals[best]);
        }
        if vals[worst].is_finite() && relative_spread(vals[worst], vals[best]) < ftol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= nf);

        let along = |coef: f64, out: &mut Vec<f64>, worst_pt: &[f64], centroid: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(centroid).zip(worst_pt) {
                *o = c + coef * (c - w);
            }
        };

        along(alpha, &mut trial, &pts[worst], &centroid);
        let fr = g(&trial);
        if fr < vals[best] {
            along(alpha * beta, &mut trial2, &pts[worst], &centroid);
            let fe = g(&trial2);
            if fe < fr {
                pts[worst].copy_from_slice(&trial2);
                vals[worst] = fe;
            } else {
                pts[worst].copy_from_slice(&trial);
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst].copy_from_slice(&trial);
            vals[worst] = fr;
            continue;
        }
        // contraction: outside if the reflection beat the worst point
        let (coef, reference) = if fr < vals[worst] { (alpha * gamma, fr) } else { (-gamma, vals[worst]) };
        along(coef, &mut trial2, &pts[worst], &centroid);
        let fc = g(&trial2);
        if fc <= reference {
            pts[worst].copy_from_slice(&trial2);
            vals[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let bp = pts[best].clone();
        for &i in &order[1..] {
            for (x, b) in pts[i].iter_mut().zip(&bp) {
                *x = b + delta * (*x - b);
            }
            vals[i] = g(&pts[i]);
        }
    }

    let best = order[0];
    SimplexOutcome {
        x: pts[best].clone(),
        value: -vals[best],
        iterations,
        converged,
        history,
    }
}
