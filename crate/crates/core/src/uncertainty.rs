//! Asymptotic error bars at the likelihood maximum.
//!
//! `G = -∂²L/∂t∂t'` is taken by central differences of the analytic
//! gradient. The parameter covariance under the trace constraint is
//! `V = G⁺ − G⁺uuᵀG⁺/(uᵀG⁺u)` with `u = 2t*`, where `G⁺` drops eigenvalues
//! below a relative threshold (directions along which the likelihood is
//! flat, typical of rank-deficient optima). Standard errors of the density
//! matrix elements follow by linear propagation through `ρ = T†T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Likelihood;
use crate::exec::{self, Exec};
use crate::linalg::{offdiag_offset, params_to_factor, symmetric_eigen, ParamVector, C64};

/// Eigenvalues of `G` at or below this fraction of the largest are null.
pub const NULL_THRESHOLD: f64 = 1e-10;
/// A negative eigenvalue beyond this fraction of the largest marks a point
/// that is not a maximum.
pub const NEGATIVE_CURVATURE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Hessian {
    /// Row-major, symmetrized.
    pub g: Vec<f64>,
    pub n: usize,
    /// `‖G − Gᵀ‖/‖G‖` before symmetrization.
    pub asymmetry: f64,
    /// Entries whose differences were not finite; stored as zero.
    pub flagged: Vec<(usize, usize)>,
}

/// `-∇²` of a function given its gradient, by central differences with base
/// step `1e-4·max(1, |tᵢ|)`. Columns are independent and may run in parallel.
pub fn hessian_fd<F>(grad: F, t: &[f64], exec: Exec) -> Result<Hessian>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    let n = t.len();
    let central = |i: usize, h: f64| -> Result<Vec<f64>> {
        let mut p = t.to_vec();
        let mut m = t.to_vec();
        p[i] += h;
        m[i] -= h;
        let gp = grad(&p)?;
        let gm = grad(&m)?;
        Ok(gp.iter().zip(&gm).map(|(a, b)| -(a - b) / (2.0 * h)).collect())
    };
    // one Richardson step (h, h/2) cancels the O(h²) error, which would
    // otherwise lift exactly flat directions above the null threshold
    let cols = exec::map(exec, n, |i| {
        let h = 1e-4 * t[i].abs().max(1.0);
        let coarse = central(i, h)?;
        let fine = central(i, 0.5 * h)?;
        Ok(coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect::<Vec<f64>>())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut raw = vec![0.0; n * n];
    let mut flagged = Vec::new();
    for (i, col) in cols.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            if v.is_finite() {
                raw[r * n + i] = *v;
            } else {
                flagged.push((r, i));
            }
        }
    }
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut skew = 0.0;
    let mut g = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            skew += (raw[r * n + c] - raw[c * n + r]).powi(2);
            g[r * n + c] = 0.5 * (raw[r * n + c] + raw[c * n + r]);
        }
    }
    Ok(Hessian {
        g,
        n,
        asymmetry: if norm > 0.0 { skew.sqrt() / norm } else { 0.0 },
        flagged,
    })
}

pub fn hessian_at_optimum(t: &ParamVector, lik: &Likelihood, exec: Exec) -> Result<Hessian> {
    let dim = t.dim();
    hessian_fd(|x| lik.gradient(&ParamVector::new(dim, x.to_vec())?), t.as_slice(), exec)
}

#[derive(Debug, Clone)]
pub struct Covariance {
    /// Row-major `V`.
    pub v: Vec<f64>,
    pub n: usize,
    pub null_directions: usize,
    /// Ratio of the largest to the smallest retained eigenvalue of `G`.
    pub condition_number: f64,
}

pub fn covariance(g: &[f64], u: &[f64]) -> Result<Covariance> {
    let n = u.len();
    let (vals, vecs) = symmetric_eigen(g, n)?;
    let lmax = vals.iter().cloned().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return Err(Error::NotAMaximum(lmax));
    }
    let lmin = vals[0];
    if lmin < -NEGATIVE_CURVATURE * lmax {
        return Err(Error::NotAMaximum(lmin / lmax));
    }
    let mut ginv = vec![0.0; n * n];
    let mut null_directions = 0;
    let mut smallest_kept = lmax;
    for (k, &l) in vals.iter().enumerate() {
        if l <= NULL_THRESHOLD * lmax {
            null_directions += 1;
            continue;
        }
        smallest_kept = smallest_kept.min(l);
        for r in 0..n {
            let vr = vecs[r * n + k] / l;
            for c in 0..n {
                ginv[r * n + c] += vr * vecs[c * n + k];
            }
        }
    }
    let gu: Vec<f64> = (0..n).map(|r| (0..n).map(|c| ginv[r * n + c] * u[c]).sum()).collect();
    let ugu: f64 = gu.iter().zip(u).map(|(a, b)| a * b).sum();
    // also rejects NaN
    if ugu.is_nan() || ugu <= 0.0 {
        return Err(Error::NotAMaximum(ugu));
    }
    let v = (0..n * n)
        .map(|i| ginv[i] - gu[i / n] * gu[i % n] / ugu)
        .collect();
    Ok(Covariance {
        v,
        n,
        null_directions,
        condition_number: lmax / smallest_kept,
    })
}

/// `∂ρ/∂t` for `ρ = T†T`: one `M×M` complex matrix per parameter.
pub fn density_jacobian(t: &ParamVector) -> Vec<Vec<C64>> {
    let dim = t.dim();
    let f = params_to_factor(t);
    let tm = f.matrix();
    let mut out = vec![vec![C64::new(0.0, 0.0); dim * dim]; dim * dim];
    let i = C64::new(0.0, 1.0);
    // ∂ρ_ab/∂Re T_km = δ_am T_kb + δ_bm T̄_ka,  ∂/∂Im T_km = −iδ_am T_kb + iδ_bm T̄_ka
    let mut fill = |slot: usize, k: usize, m: usize, imaginary: bool| {
        let d = &mut out[slot];
        for b in 0..dim {
            d[m * dim + b] += if imaginary { -i * tm[(k, b)] } else { tm[(k, b)] };
        }
        for a in 0..dim {
            let c = tm[(k, a)].conj();
            d[a * dim + m] += if imaginary { i * c } else { c };
        }
    };
    for k in 0..dim {
        fill(k, k, k, false);
        for m in 0..k {
            let o = offdiag_offset(dim, k, m);
            fill(o, k, m, false);
            fill(o + 1, k, m, true);
        }
    }
    out
}

/// `[row][col]` values for each density-matrix element.
pub type ElementTable = Vec<Vec<f64>>;

/// Per-element standard deviations of `Re ρ` and `Im ρ` from `diag(J V Jᵀ)`.
pub fn propagate_to_density(v: &[f64], t: &ParamVector) -> Result<(ElementTable, ElementTable)> {
    let dim = t.dim();
    let n = dim * dim;
    if v.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: v.len(),
        });
    }
    let jac = density_jacobian(t);
    let var = |e: usize, part: fn(C64) -> f64| -> f64 {
        let j: Vec<f64> = jac.iter().map(|d| part(d[e])).collect();
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                s += j[r] * v[r * n + c] * j[c];
            }
        }
        s.max(0.0).sqrt()
    };
    let mut re = vec![vec![0.0; dim]; dim];
    let mut im = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            re[a][b] = var(a * dim + b, |z| z.re);
            im[a][b] = var(a * dim + b, |z| z.im);
        }
    }
    Ok((re, im))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    #[serde(skip)]
    pub g: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
    pub std_re: Vec<Vec<f64>>,
    pub std_im: Vec<Vec<f64>>,
    pub condition_number: f64,
    pub null_directions: usize,
}

/// Full pipeline at an optimum `t*`; the parameters are rescaled to unit
/// trace first.
pub fn uncertainty(t: &ParamVector, lik: &Likelihood, exec: Exec) -> Result<CovarianceReport> {
    let s = t.gram_trace().sqrt();
    if s == 0.0 {
        return Err(Error::DegenerateFactor);
    }
    let t = ParamVector::new(t.dim(), t.as_slice().iter().map(|x| x / s).collect())?;
    let h = hessian_at_optimum(&t, lik, exec)?;
    if !h.flagged.is_empty() {
        log::warn!("{} Hessian entries were not finite", h.flagged.len());
    }
    let u: Vec<f64> = t.as_slice().iter().map(|x| 2.0 * x).collect();
    let cov = covariance(&h.g, &u)?;
    let (std_re, std_im) = propagate_to_density(&cov.v, &t)?;
    Ok(CovarianceReport {
        g: h.g,
        u,
        v: cov.v,
        std_re,
        std_im,
        condition_number: cov.condition_number,
        null_directions: cov.null_directions,
    })
}
