//! Monte Carlo generation of measurement records.
//!
//! Each simulation draws from a single ChaCha stream in record order, so a
//! seed fixes the output exactly. Homodyne outcomes are produced as
//! `x = √η·x_q + g`: an ideal quadrature value sampled by inverse CDF on the
//! standard grid, plus Gaussian noise of variance `(1-η)/2`. Only the
//! inverse-CDF lookups, which consume already-drawn uniforms, run in
//! parallel.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::grid::Grid;
use crate::linalg::{ComplexMatrix, C64};
use crate::povm::{
    hermite_psi_all, spin_coherent, twomode_unitary_extended, BlochDirection, MeasurementRecord,
    MixingAngles, Scheme, SchemeConfig,
};
use crate::states::{PureState, StateSpec};

/// A measurement setting held fixed for every run (test modes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Phase(f64),
    Angles(MixingAngles),
    Axes(BlochDirection, BlochDirection),
    Axis(BlochDirection),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum SettingPolicy {
    /// LO phase uniform on `[0, 2π)`; mixing angles area-uniform on the
    /// Poincaré sphere plus a uniform overall phase; spin axes uniform on the
    /// Bloch sphere.
    #[default]
    Random,
    Fixed(Setting),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub state: StateSpec,
    pub scheme: SchemeConfig,
    pub n: usize,
    pub seed: u64,
    pub settings: SettingPolicy,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<MeasurementRecord>,
    pub true_state: PureState,
    /// Truncation warning from state construction, if any.
    pub warning: Option<String>,
}

/// Inverse-CDF sampler for quadrature distributions `⟨x|R|x⟩` of a
/// single-mode operator `R` given in the Fock basis.
///
/// Cumulative integrals of every product `ψ_a ψ_b` are tabulated once
/// (trapezoid rule), so the CDF of any `R` at a node costs `O(D²)` and a
/// draw needs only a binary search over the nodes.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    dim: usize,
    grid: Grid,
    /// `cumulative[pair(a, b)][k] = ∫_{x_0}^{x_k} ψ_a ψ_b`, `a ≤ b`.
    cumulative: Vec<Vec<f64>>,
}

impl QuadratureSampler {
    pub fn new(dim: usize) -> Self {
        let grid = Grid::standard(dim);
        let table: Vec<Vec<f64>> = grid.x.iter().map(|&x| hermite_psi_all(dim, x)).collect();
        let h = grid.step;
        let mut cumulative = Vec::with_capacity(dim * (dim + 1) / 2);
        for a in 0..dim {
            for b in a..dim {
                let mut acc = 0.0;
                let mut col = Vec::with_capacity(grid.len());
                col.push(0.0);
                for k in 1..grid.len() {
                    acc += 0.5 * h * (table[k - 1][a] * table[k - 1][b] + table[k][a] * table[k][b]);
                    col.push(acc);
                }
                cumulative.push(col);
            }
        }
        Self {
            dim,
            grid,
            cumulative,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn pair(&self, a: usize, b: usize) -> usize {
        // row-major upper triangle
        a * self.dim - a * (a + 1) / 2 + b
    }

    /// Real coefficients `w_ab` with `pdf = Σ_{a≤b} w_ab ψ_a ψ_b`.
    fn weights(&self, r: &ComplexMatrix) -> Vec<(usize, f64)> {
        let mut w = Vec::new();
        for a in 0..self.dim {
            for b in a..self.dim {
                let c = if a == b { r[(a, a)].re } else { 2.0 * r[(a, b)].re };
                if c != 0.0 {
                    w.push((self.pair(a, b), c));
                }
            }
        }
        w
    }

    fn cdf_at(&self, w: &[(usize, f64)], k: usize) -> f64 {
        w.iter().map(|&(p, c)| c * self.cumulative[p][k]).sum()
    }

    /// Quadrature value at CDF level `u ∈ [0, 1)` for density operator `r`.
    pub fn sample(&self, r: &ComplexMatrix, u: f64) -> f64 {
        let w = self.weights(r);
        let last = self.grid.len() - 1;
        let target = u * self.cdf_at(&w, last);
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf_at(&w, mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c0 = self.cdf_at(&w, lo);
        let c1 = self.cdf_at(&w, hi);
        let frac = if c1 > c0 { ((target - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.5 };
        self.grid.x[lo] + frac * self.grid.step
    }

    /// `R = |c'⟩⟨c'|` with `c'_n = c_n e^{-inφ}`, the phase-rotated state
    /// whose `x̂` distribution equals the `x̂_φ` distribution of `c`.
    pub fn rotated_projector(amplitudes: &[C64], phi: f64) -> ComplexMatrix {
        let v: Vec<C64> = amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| c * C64::from_polar(1.0, -(n as f64) * phi))
            .collect();
        ComplexMatrix::outer(&v, &v)
    }
}

fn uniform_direction(rng: &mut impl Rng) -> BlochDirection {
    let cos_polar: f64 = 1.0 - 2.0 * rng.random::<f64>();
    let azimuth = TAU * rng.random::<f64>();
    BlochDirection::new(cos_polar.clamp(-1.0, 1.0).acos(), azimuth).expect("valid angles")
}

/// Point on the Poincaré sphere mapped to `θ = polar/2`, `ψ₁ - ψ₀ = azimuth`,
/// with an independent overall phase `ψ₀`.
fn random_mixing_angles(rng: &mut impl Rng) -> MixingAngles {
    let cos_polar: f64 = 1.0 - 2.0 * rng.random::<f64>();
    let azimuth = TAU * rng.random::<f64>();
    let overall = TAU * rng.random::<f64>();
    MixingAngles {
        theta: 0.5 * cos_polar.clamp(-1.0, 1.0).acos(),
        psi0: overall,
        psi1: crate::povm::wrap_phase(overall + azimuth),
    }
}

pub fn simulate(spec: &SimulationSpec, exec: Exec) -> Result<Simulation> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let cfg = spec.scheme.validated()?;
    let state = spec.state.build(&cfg)?;
    let warning = state.truncation_warning();
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let records = match cfg.scheme {
        Scheme::Homodyne1 => sample_homodyne1(&state, &cfg, spec, exec)?,
        Scheme::Homodyne2 => sample_homodyne2(&state, &cfg, spec, exec)?,
        Scheme::Spinpair => sample_spinpair(&state, spec)?,
        Scheme::Spin => sample_spin(&state, spec)?,
    };
    Ok(Simulation {
        records,
        true_state: state,
        warning,
    })
}

fn noise_scale(eta: f64) -> f64 {
    ((1.0 - eta) / 2.0).max(0.0).sqrt()
}

pub fn sample_homodyne1(
    state: &PureState,
    cfg: &SchemeConfig,
    spec: &SimulationSpec,
    exec: Exec,
) -> Result<Vec<MeasurementRecord>> {
    if state.dims().len() != 1 {
        return Err(Error::InvalidParameter("homodyne1 needs a single-mode state".into()));
    }
    let fixed = match spec.settings {
        SettingPolicy::Random => None,
        SettingPolicy::Fixed(Setting::Phase(p)) => Some(crate::povm::wrap_phase(p)),
        SettingPolicy::Fixed(other) => {
            return Err(Error::InvalidParameter(format!("{other:?} is not a homodyne1 setting")))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draws: Vec<(f64, f64, f64)> = (0..spec.n)
        .map(|_| {
            let phi = fixed.unwrap_or_else(|| TAU * rng.random::<f64>());
            let u: f64 = rng.random();
            let z: f64 = rng.sample(StandardNormal);
            (phi, u, z)
        })
        .collect();
    let sampler = QuadratureSampler::new(state.dim());
    let amps = state.amplitudes();
    let (se, sn) = (cfg.eta.sqrt(), noise_scale(cfg.eta));
    Ok(exec::map(exec, draws.len(), |i| {
        let (phi, u, z) = draws[i];
        let r = QuadratureSampler::rotated_projector(amps, phi);
        let xq = sampler.sample(&r, u);
        MeasurementRecord::Homodyne1 {
            x: se * xq + sn * z,
            phi,
        }
    }))
}

/// Reduced mode-1 density of `Û|ψ⟩` over the complete photon-number blocks.
pub fn rotated_mode1_density(state: &PureState, cfg: &SchemeConfig, angles: MixingAngles) -> Result<ComplexMatrix> {
    let basis = cfg
        .two_mode_basis()
        .ok_or_else(|| Error::InvalidParameter("homodyne2 needs per-mode cutoffs".into()))?;
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: state.dim(),
        });
    }
    let ext = basis.extended_states();
    let d1 = basis.max_total() + 1;
    let rotated = twomode_unitary_extended(angles, basis).matvec(state.amplitudes())?;
    let mut r = ComplexMatrix::zeros(d1, d1);
    for (i, &(p1, p2)) in ext.iter().enumerate() {
        for (j, &(q1, q2)) in ext.iter().enumerate() {
            if p2 == q2 {
                r[(p1, q1)] += rotated[i] * rotated[j].conj();
            }
        }
    }
    Ok(r)
}

pub fn sample_homodyne2(
    state: &PureState,
    cfg: &SchemeConfig,
    spec: &SimulationSpec,
    exec: Exec,
) -> Result<Vec<MeasurementRecord>> {
    let basis = cfg
        .two_mode_basis()
        .ok_or_else(|| Error::InvalidParameter("homodyne2 needs per-mode cutoffs".into()))?;
    let fixed = match spec.settings {
        SettingPolicy::Random => None,
        SettingPolicy::Fixed(Setting::Angles(a)) => Some(a),
        SettingPolicy::Fixed(other) => {
            return Err(Error::InvalidParameter(format!("{other:?} is not a homodyne2 setting")))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draws: Vec<(MixingAngles, f64, f64)> = (0..spec.n)
        .map(|_| {
            let ang = fixed.unwrap_or_else(|| random_mixing_angles(&mut rng));
            let u: f64 = rng.random();
            let z: f64 = rng.sample(StandardNormal);
            (ang, u, z)
        })
        .collect();
    let sampler = QuadratureSampler::new(basis.max_total() + 1);
    let (se, sn) = (cfg.eta.sqrt(), noise_scale(cfg.eta));
    let out = exec::map(exec, draws.len(), |i| {
        let (ang, u, z) = draws[i];
        let r = rotated_mode1_density(state, cfg, ang)?;
        let xq = sampler.sample(&r, u);
        Ok(MeasurementRecord::Homodyne2 {
            x: se * xq + sn * z,
            theta: ang.theta,
            psi0: ang.psi0,
            psi1: ang.psi1,
        })
    });
    out.into_iter().collect()
}

fn pick(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    // u·total rounding past the last edge; fall back to the last nonzero outcome
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

fn overlap(v: &[C64], psi: &[C64]) -> f64 {
    v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

pub fn sample_spinpair(state: &PureState, spec: &SimulationSpec) -> Result<Vec<MeasurementRecord>> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: state.dim() });
    }
    let fixed = match spec.settings {
        SettingPolicy::Random => None,
        SettingPolicy::Fixed(Setting::Axes(a, b)) => Some((a, b)),
        SettingPolicy::Fixed(other) => {
            return Err(Error::InvalidParameter(format!("{other:?} is not a spin-pair setting")))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let psi = state.amplitudes();
    let mut out = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let (a, b) = fixed.unwrap_or_else(|| {
            let a = uniform_direction(&mut rng);
            (a, uniform_direction(&mut rng))
        });
        let dirs = [
            (a, b),
            (a, b.antipode()),
            (a.antipode(), b),
            (a.antipode(), b.antipode()),
        ];
        let probs: Vec<f64> = dirs
            .iter()
            .map(|&(da, db)| {
                let sa = spin_coherent(da);
                let sb = spin_coherent(db);
                overlap(&[sa[0] * sb[0], sa[0] * sb[1], sa[1] * sb[0], sa[1] * sb[1]], psi)
            })
            .collect();
        let (omega_a, omega_b) = dirs[pick(&probs, rng.random())];
        out.push(MeasurementRecord::Spinpair { omega_a, omega_b });
    }
    Ok(out)
}

pub fn sample_spin(state: &PureState, spec: &SimulationSpec) -> Result<Vec<MeasurementRecord>> {
    if state.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: state.dim() });
    }
    let fixed = match spec.settings {
        SettingPolicy::Random => None,
        SettingPolicy::Fixed(Setting::Axis(a)) => Some(a),
        SettingPolicy::Fixed(other) => {
            return Err(Error::InvalidParameter(format!("{other:?} is not a spin setting")))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let psi = state.amplitudes();
    let mut out = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let axis = fixed.unwrap_or_else(|| uniform_direction(&mut rng));
        let dirs = [axis, axis.antipode()];
        let probs: Vec<f64> = dirs.iter().map(|&d| overlap(&spin_coherent(d), psi)).collect();
        out.push(MeasurementRecord::Spin {
            omega: dirs[pick(&probs, rng.random())],
        });
    }
    Ok(out)
}
