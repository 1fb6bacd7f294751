//! Reference pure states in truncated Fock (or spin) bases.

use std::f64::consts::FRAC_1_SQRT_2;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, C64, ONE, ZERO};
use crate::povm::{hermite_psi_all, Cutoffs, Scheme, SchemeConfig};

/// Truncated weight above which constructors attach a warning.
pub const TRUNCATION_WARN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
    truncated_weight: f64,
}

impl PureState {
    /// Normalizes `amplitudes`; `dims` lists the subsystem dimensions.
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: amplitudes.len(),
            });
        }
        Self::normalized(dims, amplitudes, 0.0)
    }

    fn normalized(dims: Vec<usize>, mut amplitudes: Vec<C64>, truncated_weight: f64) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("state has zero norm".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self {
            dims,
            amplitudes,
            truncated_weight,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Probability mass discarded by the Fock cutoff before renormalization.
    pub fn truncated_weight(&self) -> f64 {
        self.truncated_weight
    }

    pub fn truncation_warning(&self) -> Option<String> {
        (self.truncated_weight > TRUNCATION_WARN).then(|| {
            format!(
                "cutoff discards {:.2}% of the state's weight",
                100.0 * self.truncated_weight
            )
        })
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(&self.amplitudes).expect("state is normalized")
    }

    /// `Σ n |c_n|²` for a single mode.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }
}

/// Coherent state `|α⟩` truncated to `M` Fock levels.
pub fn coherent_state(alpha: C64, cutoff: usize) -> Result<PureState> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
    }
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let mut amps = Vec::with_capacity(cutoff);
    let mut term = C64::new(pref, 0.0);
    for n in 0..cutoff {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amps.push(term);
    }
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    PureState::normalized(vec![cutoff], amps, (1.0 - kept).max(0.0))
}

/// Squeezed vacuum `S(r)|0⟩` squeezed along `φ = 0` (quadrature variance
/// `e^{-2r}/2`): `c_{2n} = (-tanh r)ⁿ √((2n)!) / (2ⁿ n! √cosh r)`.
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> Result<PureState> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
    }
    let t = -r.tanh();
    let mut amps = vec![ZERO; cutoff];
    // c_{2n} / c_{2n-2} = t · √((2n)(2n-1)) / (2n)
    let mut c = 1.0 / r.cosh().sqrt();
    for n in 0..cutoff.div_ceil(2) {
        if n > 0 {
            let k = 2.0 * n as f64;
            c *= t * (k * (k - 1.0)).sqrt() / k;
        }
        amps[2 * n] = C64::new(c, 0.0);
    }
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    PureState::normalized(vec![cutoff], amps, (1.0 - kept).max(0.0))
}

/// `r` with `sinh² r = ⟨n⟩`.
pub fn squeezing_for_mean_photon(mean_photon: f64) -> f64 {
    mean_photon.sqrt().asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellVariant {
    /// `(|00⟩ + |11⟩)/√2`
    Psi1,
    /// `(|01⟩ + |10⟩)/√2`
    Psi2,
}

/// Two-mode Bell-type state with per-mode cutoffs `(m1, m2)`.
pub fn two_mode_bell(variant: BellVariant, m1: usize, m2: usize) -> Result<PureState> {
    if m1 < 2 || m2 < 2 {
        return Err(Error::InvalidParameter(
            "Bell states need a per-mode cutoff of at least 2".into(),
        ));
    }
    let mut amps = vec![ZERO; m1 * m2];
    let idx = |a: usize, b: usize| a * m2 + b;
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    match variant {
        BellVariant::Psi1 => {
            amps[idx(0, 0)] = s;
            amps[idx(1, 1)] = s;
        }
        BellVariant::Psi2 => {
            amps[idx(0, 1)] = s;
            amps[idx(1, 0)] = s;
        }
    }
    Ok(PureState {
        dims: vec![m1, m2],
        amplitudes: amps,
        truncated_weight: 0.0,
    })
}

/// `(|↑↓⟩ - |↓↑⟩)/√2` in the ordering `{↑↑, ↑↓, ↓↑, ↓↓}`.
pub fn singlet() -> PureState {
    let s = FRAC_1_SQRT_2;
    PureState {
        dims: vec![2, 2],
        amplitudes: vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO],
        truncated_weight: 0.0,
    }
}

/// `|Σ_n c_n e^{-inφ} ψ_n(x)|²`, the ideal quadrature density of
/// `x̂_φ = (â e^{-iφ} + â† e^{iφ})/√2`.
pub fn ideal_quadrature_pdf(state: &PureState, phi: f64, x: f64) -> Result<f64> {
    if state.dims().len() != 1 {
        return Err(Error::InvalidParameter(
            "quadrature pdf needs a single-mode state".into(),
        ));
    }
    let psi = hermite_psi_all(state.dim(), x);
    let amp: C64 = state
        .amplitudes()
        .iter()
        .zip(&psi)
        .enumerate()
        .map(|(n, (c, p))| c * C64::from_polar(*p, -(n as f64) * phi))
        .sum();
    Ok(amp.norm_sqr())
}

/// Serializable description of a reference state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateSpec {
    Coherent { alpha_re: f64, alpha_im: f64 },
    Squeezed { mean_photon: f64 },
    Bell { variant: BellVariant },
    Singlet,
    /// Amplitudes as `[re, im]` pairs in the scheme's basis ordering.
    Custom { amplitudes: Vec<[f64; 2]> },
}

impl StateSpec {
    pub fn build(&self, cfg: &SchemeConfig) -> Result<PureState> {
        let wrong = || {
            Error::InvalidParameter(format!("state {self:?} is not available for scheme {}", cfg.scheme))
        };
        match (self, cfg.scheme, cfg.cutoff) {
            (StateSpec::Coherent { alpha_re, alpha_im }, Scheme::Homodyne1, Cutoffs::Single(m)) => {
                coherent_state(C64::new(*alpha_re, *alpha_im), m)
            }
            (StateSpec::Squeezed { mean_photon }, Scheme::Homodyne1, Cutoffs::Single(m)) => {
                if *mean_photon < 0.0 {
                    return Err(Error::InvalidParameter("mean photon number must be ≥ 0".into()));
                }
                squeezed_vacuum(squeezing_for_mean_photon(*mean_photon), m)
            }
            (StateSpec::Bell { variant }, Scheme::Homodyne2, Cutoffs::PerMode(a, b)) => {
                two_mode_bell(*variant, a, b)
            }
            (StateSpec::Singlet, Scheme::Spinpair, _) => Ok(singlet()),
            (StateSpec::Custom { amplitudes }, _, cut) => {
                let dims = match cut {
                    Cutoffs::Single(m) => vec![m],
                    Cutoffs::PerMode(a, b) => vec![a, b],
                };
                let amps = amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                PureState::new(dims, amps)
            }
            _ => Err(wrong()),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    /// `coherent:RE,IM`, `squeezed:MEAN`, `bell:psi1|psi2`, `singlet`,
    /// `custom:a,b,...` (real amplitudes), or a JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .filter(|a| !a.trim().is_empty())
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("bad number '{a}': {e}")))
                })
                .collect()
        };
        match kind {
            "coherent" => {
                let v = nums()?;
                match v.as_slice() {
                    [re] => Ok(StateSpec::Coherent { alpha_re: *re, alpha_im: 0.0 }),
                    [re, im] => Ok(StateSpec::Coherent { alpha_re: *re, alpha_im: *im }),
                    _ => Err(Error::InvalidParameter("coherent:RE[,IM]".into())),
                }
            }
            "squeezed" => match nums()?.as_slice() {
                [m] => Ok(StateSpec::Squeezed { mean_photon: *m }),
                _ => Err(Error::InvalidParameter("squeezed:MEAN_PHOTON".into())),
            },
            "bell" => match args {
                "psi1" => Ok(StateSpec::Bell { variant: BellVariant::Psi1 }),
                "psi2" => Ok(StateSpec::Bell { variant: BellVariant::Psi2 }),
                _ => Err(Error::InvalidParameter("bell:psi1|psi2".into())),
            },
            "singlet" => Ok(StateSpec::Singlet),
            "custom" => Ok(StateSpec::Custom {
                amplitudes: nums()?.into_iter().map(|a| [a, 0.0]).collect(),
            }),
            other => Err(Error::InvalidParameter(format!("unknown state '{other}'"))),
        }
    }
}

/// The single-qubit basis vectors, used by fixtures.
pub fn qubit_basis(bit: usize) -> [C64; 2] {
    if bit == 0 {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::linalg::ComplexMatrix;
    use approx::assert_abs_diff_eq;

    fn annihilation(dim: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(dim, dim, |r, c| {
            if c == r + 1 {
                C64::new((c as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        })
    }

    /// ⟨ψ|x̂_φ|ψ⟩ and ⟨ψ|x̂_φ²|ψ⟩ from truncated ladder matrices.
    fn quadrature_moments(state: &PureState, phi: f64) -> (f64, f64) {
        let a = annihilation(state.dim());
        let xq = a
            .scale(C64::from_polar(FRAC_1_SQRT_2, -phi))
            .add(&a.adjoint().scale(C64::from_polar(FRAC_1_SQRT_2, phi)))
            .unwrap();
        let v = state.amplitudes();
        let xv = xq.matvec(v).unwrap();
        let mean: C64 = v.iter().zip(&xv).map(|(a, b)| a.conj() * b).sum();
        let second: f64 = xv.iter().map(|z| z.norm_sqr()).sum();
        (mean.re, second)
    }

    fn pdf_moments(state: &PureState, phi: f64) -> (f64, f64, f64) {
        let g = Grid::standard(state.dim());
        let p: Vec<f64> = g.x.iter().map(|&x| ideal_quadrature_pdf(state, phi, x).unwrap()).collect();
        let m0: f64 = p.iter().zip(&g.weights).map(|(p, w)| p * w).sum();
        let m1: f64 = p.iter().zip(&g.weights).zip(&g.x).map(|((p, w), x)| p * w * x).sum();
        let m2: f64 = p.iter().zip(&g.weights).zip(&g.x).map(|((p, w), x)| p * w * x * x).sum();
        (m0, m1, m2)
    }

    #[test]
    fn vacuum_and_coherent() {
        let vac = coherent_state(ZERO, 5).unwrap();
        assert_eq!(vac.amplitudes()[0], ONE);
        assert!(vac.amplitudes()[1..].iter().all(|z| *z == ZERO));

        let coh = coherent_state(ONE, 10).unwrap();
        assert_abs_diff_eq!(coh.mean_photon_number(), 1.0, epsilon = 1e-3);
        let a = coh.amplitudes();
        assert_abs_diff_eq!((a[1] / a[0]).norm(), 1.0, epsilon = 1e-14);
        assert!(coh.truncation_warning().is_none());
    }

    #[test]
    fn truncation_warning_for_large_alpha() {
        let s = coherent_state(C64::new(3.0, 0.0), 4).unwrap();
        assert!(s.truncated_weight() > 0.5);
        assert!(s.truncation_warning().is_some());
        let norm: f64 = s.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_examples() {
        let s = squeezed_vacuum(0.0, 6).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);

        let r = squeezing_for_mean_photon(0.5);
        assert_abs_diff_eq!(r, 0.6584789484624084, epsilon = 1e-12);
        let s = squeezed_vacuum(r, 12).unwrap();
        assert_abs_diff_eq!(s.mean_photon_number(), 0.5, epsilon = 0.005);
        assert_eq!(s.amplitudes()[1], ZERO);
        assert_eq!(s.amplitudes()[3], ZERO);
    }

    #[test]
    fn bell_states() {
        let s = FRAC_1_SQRT_2;
        let p1 = two_mode_bell(BellVariant::Psi1, 2, 2).unwrap();
        assert_eq!(p1.amplitudes()[0].re, s);
        assert_eq!(p1.amplitudes()[3].re, s);
        let p2 = two_mode_bell(BellVariant::Psi2, 2, 2).unwrap();
        assert_eq!(p2.amplitudes()[1].re, s);
        assert_eq!(p2.amplitudes()[2].re, s);
        for st in [&p1, &p2] {
            let n: f64 = st.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-15);
        }
        assert!(two_mode_bell(BellVariant::Psi1, 1, 2).is_err());
    }

    #[test]
    fn singlet_components_and_invariance() {
        let st = singlet();
        let a = st.amplitudes();
        assert_abs_diff_eq!(a[1].re, FRAC_1_SQRT_2);
        assert_abs_diff_eq!(a[2].re, -FRAC_1_SQRT_2);
        assert_eq!(a[0], ZERO);
        // U ⊗ U for a random SU(2) element leaves the singlet invariant.
        let (th, ph, la) = (0.7f64, 1.9f64, -0.4f64);
        let u = [
            [C64::new((th / 2.0).cos(), 0.0), -C64::from_polar((th / 2.0).sin(), la)],
            [C64::from_polar((th / 2.0).sin(), ph), C64::from_polar((th / 2.0).cos(), ph + la)],
        ];
        let mut out = [ZERO; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[2 * i + j] += u[i][k] * u[j][l] * a[2 * k + l];
                    }
                }
            }
        }
        let ov: C64 = a.iter().zip(&out).map(|(x, y)| x.conj() * y).sum();
        assert_abs_diff_eq!(ov.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn vacuum_pdf_is_gaussian() {
        let vac = coherent_state(ZERO, 4).unwrap();
        for &x in &[-2.0, -0.3, 0.0, 1.1] {
            for &phi in &[0.0, 1.0, 4.0] {
                let p = ideal_quadrature_pdf(&vac, phi, x).unwrap();
                let expect = (-x * x).exp() / std::f64::consts::PI.sqrt();
                assert_abs_diff_eq!(p, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn coherent_pdf_mean() {
        let coh = coherent_state(ONE, 10).unwrap();
        let (m0, m1, _) = pdf_moments(&coh, 0.0);
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m1, 2f64.sqrt(), epsilon = 0.01);
        // sign convention: ⟨x̂_φ⟩ = √2 Re(α e^{-iφ}); α = i at φ = π/2 gives +√2
        let coh_i = coherent_state(C64::new(0.0, 1.0), 10).unwrap();
        let (_, m1, _) = pdf_moments(&coh_i, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(m1, 2f64.sqrt(), epsilon = 0.01);
    }

    #[test]
    fn squeezed_pdf_variance() {
        let r = squeezing_for_mean_photon(0.5);
        let s = squeezed_vacuum(r, 30).unwrap();
        let (m0, m1, m2) = pdf_moments(&s, 0.0);
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-6);
        let var = m2 - m1 * m1;
        let expect = (-2.0 * r).exp() / 2.0;
        assert!((var - expect).abs() < 0.01 * expect, "{var} vs {expect}");
    }

    #[test]
    fn pdf_moments_match_operator_oracle() {
        let states = [
            coherent_state(C64::new(0.6, -0.3), 14).unwrap(),
            squeezed_vacuum(0.3, 20).unwrap(),
            PureState::new(vec![3], vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.5, 0.5)]).unwrap(),
        ];
        for st in &states {
            for &phi in &[0.0, 0.8, 2.5] {
                let (m0, m1, m2) = pdf_moments(st, phi);
                let (e1, e2) = quadrature_moments(st, phi);
                assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-6);
                assert_abs_diff_eq!(m1, e1, epsilon = 1e-4);
                // Truncated ladder matrices are exact for ⟨x²⟩ only below the cutoff edge.
                if st.dim() > 3 {
                    assert_abs_diff_eq!(m2, e2, epsilon = 1e-4);
                }
            }
        }
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "coherent:1,0".parse::<StateSpec>().unwrap(),
            StateSpec::Coherent { alpha_re: 1.0, alpha_im: 0.0 }
        );
        assert_eq!("singlet".parse::<StateSpec>().unwrap(), StateSpec::Singlet);
        assert_eq!(
            "bell:psi2".parse::<StateSpec>().unwrap(),
            StateSpec::Bell { variant: BellVariant::Psi2 }
        );
        let js = r#"{"type":"squeezed","mean_photon":0.5}"#;
        assert_eq!(js.parse::<StateSpec>().unwrap(), StateSpec::Squeezed { mean_photon: 0.5 });
        assert!("bogus".parse::<StateSpec>().is_err());
        let cfg = SchemeConfig::homodyne1(0.8, 6).unwrap();
        assert!(StateSpec::Singlet.build(&cfg).is_err());
        assert_eq!(StateSpec::Coherent { alpha_re: 1.0, alpha_im: 0.0 }.build(&cfg).unwrap().dim(), 6);
    }
}
