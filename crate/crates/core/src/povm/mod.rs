//! Measurement records and the positive-form outcome probabilities.
//!
//! Every POVM element used here factors as `F = Σ_r |v_r⟩⟨v_r|`, so the
//! probability under `ρ ∝ T†T` is `Σ_r ‖T v_r‖²`: a sum of squared moduli,
//! nonnegative by construction. [`PositiveForm`] holds the vectors `v_r` for
//! one record; they depend only on the record and the scheme, never on `T`,
//! so a likelihood evaluation reduces to small triangular mat-vecs.

pub mod hermite;
pub mod oracle;
pub mod twomode;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CholeskyFactor, ComplexMatrix, C64, ZERO};

pub use hermite::{bcoeff, hermite_psi, hermite_psi_all};
pub use oracle::povm_matrix_oracle;
pub use twomode::{twomode_unitary, twomode_unitary_extended, MixingAngles, TwoModeBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Single-mode homodyne detection, record `(x, φ)`.
    Homodyne1,
    /// Two-mode single-LO homodyne detection, record `(x, θ, ψ₀, ψ₁)`.
    Homodyne2,
    /// Spin-1/2 pair, record `(Ω_A, Ω_B)`.
    Spinpair,
    /// Single spin-1/2, record `Ω`.
    Spin,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Homodyne1 => "homodyne1",
            Scheme::Homodyne2 => "homodyne2",
            Scheme::Spinpair => "spinpair",
            Scheme::Spin => "spin",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homodyne1" => Ok(Scheme::Homodyne1),
            "homodyne2" => Ok(Scheme::Homodyne2),
            "spinpair" => Ok(Scheme::Spinpair),
            "spin" => Ok(Scheme::Spin),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Fock cutoffs: `M` for one mode, `(M₁, M₂)` for two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cutoffs {
    Single(usize),
    PerMode(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub eta: f64,
    pub cutoff: Cutoffs,
}

impl SchemeConfig {
    pub fn homodyne1(eta: f64, cutoff: usize) -> Result<Self> {
        Self {
            scheme: Scheme::Homodyne1,
            eta,
            cutoff: Cutoffs::Single(cutoff),
        }
        .validated()
    }

    pub fn homodyne2(eta: f64, m1: usize, m2: usize) -> Result<Self> {
        Self {
            scheme: Scheme::Homodyne2,
            eta,
            cutoff: Cutoffs::PerMode(m1, m2),
        }
        .validated()
    }

    pub fn spin_pair() -> Self {
        Self {
            scheme: Scheme::Spinpair,
            eta: 1.0,
            cutoff: Cutoffs::PerMode(2, 2),
        }
    }

    pub fn spin() -> Self {
        Self {
            scheme: Scheme::Spin,
            eta: 1.0,
            cutoff: Cutoffs::Single(2),
        }
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency must lie in (0, 1], got {}",
                self.eta
            )));
        }
        let ok = match (self.scheme, self.cutoff) {
            (Scheme::Homodyne1, Cutoffs::Single(m)) => m >= 1,
            (Scheme::Homodyne2, Cutoffs::PerMode(a, b)) => a >= 1 && b >= 1,
            (Scheme::Spinpair, Cutoffs::PerMode(2, 2)) => true,
            (Scheme::Spin, Cutoffs::Single(2)) => true,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "cutoff {:?} is not valid for scheme {}",
                self.cutoff, self.scheme
            )));
        }
        Ok(self)
    }

    /// Hilbert-space dimension of the reconstructed state.
    pub fn dim(&self) -> usize {
        match self.cutoff {
            Cutoffs::Single(m) => m,
            Cutoffs::PerMode(a, b) => a * b,
        }
    }

    pub fn two_mode_basis(&self) -> Option<TwoModeBasis> {
        match (self.scheme, self.cutoff) {
            (Scheme::Homodyne2, Cutoffs::PerMode(a, b)) => Some(TwoModeBasis::new(a, b)),
            _ => None,
        }
    }
}

/// Direction on the Bloch sphere, stored as `[polar, azimuth]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct BlochDirection {
    polar: f64,
    azimuth: f64,
}

impl BlochDirection {
    pub const PLUS_Z: Self = Self { polar: 0.0, azimuth: 0.0 };
    pub const MINUS_Z: Self = Self { polar: PI, azimuth: 0.0 };

    /// `polar ∈ [0, π]`; the azimuth is wrapped into `[0, 2π)`.
    pub fn new(polar: f64, azimuth: f64) -> Result<Self> {
        if !polar.is_finite() || !azimuth.is_finite() || !(0.0..=PI).contains(&polar) {
            return Err(Error::InvalidParameter(format!(
                "invalid Bloch angles ({polar}, {azimuth})"
            )));
        }
        Ok(Self {
            polar,
            azimuth: wrap_phase(azimuth),
        })
    }

    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::InvalidParameter("zero Bloch vector".into()));
        }
        let polar = (v[2] / r).clamp(-1.0, 1.0).acos();
        Self::new(polar, v[1].atan2(v[0]))
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    pub fn vector(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }

    /// The opposite direction `-Ω`.
    pub fn antipode(&self) -> Self {
        Self {
            polar: PI - self.polar,
            azimuth: wrap_phase(self.azimuth + PI),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let a = self.vector();
        let b = other.vector();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}

impl TryFrom<[f64; 2]> for BlochDirection {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<BlochDirection> for [f64; 2] {
    fn from(d: BlochDirection) -> Self {
        [d.polar, d.azimuth]
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Outcome of one measurement run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum MeasurementRecord {
    Homodyne1 {
        x: f64,
        phi: f64,
    },
    Homodyne2 {
        x: f64,
        theta: f64,
        psi0: f64,
        psi1: f64,
    },
    Spinpair {
        omega_a: BlochDirection,
        omega_b: BlochDirection,
    },
    Spin {
        omega: BlochDirection,
    },
}

impl MeasurementRecord {
    pub fn scheme(&self) -> Scheme {
        match self {
            MeasurementRecord::Homodyne1 { .. } => Scheme::Homodyne1,
            MeasurementRecord::Homodyne2 { .. } => Scheme::Homodyne2,
            MeasurementRecord::Spinpair { .. } => Scheme::Spinpair,
            MeasurementRecord::Spin { .. } => Scheme::Spin,
        }
    }

    /// Range checks: finite outcome, phases in `[0, 2π)`, `θ ∈ [0, π/2]`.
    pub fn validate(&self) -> Result<()> {
        let phase_ok = |p: f64| (0.0..TAU).contains(&p);
        let ok = match *self {
            MeasurementRecord::Homodyne1 { x, phi } => x.is_finite() && phase_ok(phi),
            MeasurementRecord::Homodyne2 { x, theta, psi0, psi1 } => {
                x.is_finite()
                    && (0.0..=PI / 2.0).contains(&theta)
                    && phase_ok(psi0)
                    && phase_ok(psi1)
            }
            MeasurementRecord::Spinpair { .. } | MeasurementRecord::Spin { .. } => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("record out of range: {self:?}")))
        }
    }

    pub fn positive_form(&self, cfg: &SchemeConfig) -> Result<PositiveForm> {
        if self.scheme() != cfg.scheme {
            return Err(Error::SchemeMismatch {
                expected: cfg.scheme.to_string(),
                got: self.scheme().to_string(),
            });
        }
        match *self {
            MeasurementRecord::Homodyne1 { x, phi } => homodyne1_form(x, phi, cfg),
            MeasurementRecord::Homodyne2 { x, theta, psi0, psi1 } => {
                homodyne2_form(x, MixingAngles { theta, psi0, psi1 }, cfg)
            }
            MeasurementRecord::Spinpair { omega_a, omega_b } => Ok(spinpair_form(omega_a, omega_b)),
            MeasurementRecord::Spin { omega } => Ok(PositiveForm::rank_one(spin_coherent(omega).to_vec())),
        }
    }
}

/// `F = Σ_r |v_r⟩⟨v_r|`. Each vector is stored from its first nonzero index
/// onward, which lets the evaluator skip the zero block of the triangular
/// product.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveForm {
    dim: usize,
    starts: Vec<usize>,
    offsets: Vec<usize>,
    entries: Vec<C64>,
}

impl PositiveForm {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            starts: Vec::new(),
            offsets: vec![0],
            entries: Vec::new(),
        }
    }

    pub fn rank_one(v: Vec<C64>) -> Self {
        let mut f = Self::new(v.len());
        f.push(&v);
        f
    }

    /// Adds `|v⟩⟨v|`; all-zero vectors are skipped.
    pub fn push(&mut self, v: &[C64]) {
        assert_eq!(v.len(), self.dim, "vector length must equal the form dimension");
        let Some(start) = v.iter().position(|z| *z != ZERO) else {
            return;
        };
        self.starts.push(start);
        self.entries.extend_from_slice(&v[start..]);
        self.offsets.push(self.entries.len());
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// `(start, tail)` pairs: the vector is zero before `start`.
    pub fn vectors(&self) -> impl Iterator<Item = (usize, &[C64])> {
        self.starts
            .iter()
            .enumerate()
            .map(move |(r, &s)| (s, &self.entries[self.offsets[r]..self.offsets[r + 1]]))
    }

    /// `Σ_r ‖T v_r‖² = Tr(T†T F)`.
    pub fn probability(&self, t: &CholeskyFactor) -> f64 {
        debug_assert_eq!(t.dim(), self.dim);
        let tm = t.matrix();
        let mut acc = 0.0;
        for (start, tail) in self.vectors() {
            for k in start..self.dim {
                let row = &tm.row(k)[start..=k];
                let w: C64 = row.iter().zip(tail).map(|(a, b)| a * b).sum();
                acc += w.norm_sqr();
            }
        }
        acc
    }

    /// Dense `F`.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for (start, tail) in self.vectors() {
            for (a, va) in tail.iter().enumerate() {
                for (b, vb) in tail.iter().enumerate() {
                    m[(start + a, start + b)] += va * vb.conj();
                }
            }
        }
        m
    }
}

fn homodyne1_form(x: f64, phi: f64, cfg: &SchemeConfig) -> Result<PositiveForm> {
    let m = cfg.dim();
    let psi = hermite_psi_all(m, x);
    let mut form = PositiveForm::new(m);
    let mut v = vec![ZERO; m];
    // Ideal detector: the j-sum collapses to j = 0.
    let max_loss = if cfg.eta >= 1.0 { 0 } else { m - 1 };
    for j in 0..=max_loss {
        v.iter_mut().for_each(|z| *z = ZERO);
        for n in 0..m - j {
            let b = bcoeff(n, j, cfg.eta);
            v[n + j] = C64::from_polar(b * psi[n], n as f64 * phi);
        }
        form.push(&v);
    }
    Ok(form)
}

fn homodyne2_form(x: f64, angles: MixingAngles, cfg: &SchemeConfig) -> Result<PositiveForm> {
    let basis = cfg
        .two_mode_basis()
        .ok_or_else(|| Error::InvalidParameter("homodyne2 needs per-mode cutoffs".into()))?;
    let ext = basis.extended_states();
    let nmax = basis.max_total();
    let u = twomode_unitary_extended(angles, basis);
    let psi = hermite_psi_all(nmax + 1, x);
    let pos = |p1: usize, p2: usize| ext.iter().position(|&e| e == (p1, p2)).expect("in extended basis");

    let dim = basis.dim();
    let mut form = PositiveForm::new(dim);
    let mut v = vec![ZERO; dim];
    for n2 in 0..=nmax {
        let max_loss = if cfg.eta >= 1.0 { 0 } else { nmax - n2 };
        for j in 0..=max_loss {
            v.iter_mut().for_each(|z| *z = ZERO);
            for (n1, &psi_n1) in psi.iter().enumerate().take(nmax - n2 - j + 1) {
                let a = bcoeff(n1, j, cfg.eta) * psi_n1;
                if a == 0.0 {
                    continue;
                }
                let p = pos(n1 + j, n2);
                // v = Û† A: ⟨m|Û†|p⟩ = conj⟨p|Û|m⟩.
                for (m, z) in v.iter_mut().enumerate() {
                    *z += u[(p, m)].conj() * a;
                }
            }
            form.push(&v);
        }
    }
    Ok(form)
}

fn spinpair_form(a: BlochDirection, b: BlochDirection) -> PositiveForm {
    let sa = spin_coherent(a);
    let sb = spin_coherent(b);
    let v = vec![sa[0] * sb[0], sa[0] * sb[1], sa[1] * sb[0], sa[1] * sb[1]];
    PositiveForm::rank_one(v)
}

/// `cos(ϑ/2)|↑⟩ + e^{iϕ} sin(ϑ/2)|↓⟩`.
pub fn spin_coherent(omega: BlochDirection) -> [C64; 2] {
    let h = omega.polar() / 2.0;
    [C64::new(h.cos(), 0.0), C64::from_polar(h.sin(), omega.azimuth())]
}

fn check_dim(t: &CholeskyFactor, cfg: &SchemeConfig) -> Result<()> {
    if t.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: t.dim(),
        });
    }
    Ok(())
}

/// `Tr[T†T Ĥ(x; φ)]` in the explicitly positive form.
pub fn homodyne1_prob(t: &CholeskyFactor, x: f64, phi: f64, cfg: &SchemeConfig) -> Result<f64> {
    check_dim(t, cfg)?;
    Ok(MeasurementRecord::Homodyne1 { x, phi }.positive_form(cfg)?.probability(t))
}

/// `Tr[T†T Ĥ(x; θ, ψ₀, ψ₁)]` in the explicitly positive form.
pub fn homodyne2_prob(t: &CholeskyFactor, x: f64, angles: MixingAngles, cfg: &SchemeConfig) -> Result<f64> {
    check_dim(t, cfg)?;
    let rec = MeasurementRecord::Homodyne2 {
        x,
        theta: angles.theta,
        psi0: angles.psi0,
        psi1: angles.psi1,
    };
    Ok(rec.positive_form(cfg)?.probability(t))
}

/// `Σ_μ |⟨μ|T|Ω_A, Ω_B⟩|²`.
pub fn spinpair_prob(t: &CholeskyFactor, a: BlochDirection, b: BlochDirection) -> Result<f64> {
    if t.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: t.dim() });
    }
    Ok(spinpair_form(a, b).probability(t))
}

/// `Σ_μ |⟨μ|T|Ω⟩|²` for a single spin.
pub fn spin_prob(t: &CholeskyFactor, omega: BlochDirection) -> Result<f64> {
    if t.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: t.dim() });
    }
    Ok(PositiveForm::rank_one(spin_coherent(omega).to_vec()).probability(t))
}
