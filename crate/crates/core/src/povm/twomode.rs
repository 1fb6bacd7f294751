//! Two-mode mixing unitary `Û(θ, ψ₀, ψ₁)` with
//! `Û† â Û = e^{-iψ₀} cosθ â + e^{-iψ₁} sinθ b̂`.
//!
//! `Û = B(θ) P(ψ₀, ψ₁)`: a phase shift `e^{-i(ψ₀ n_a + ψ₁ n_b)}` followed by a
//! beam splitter. The beam splitter conserves the total photon number `N`
//! and acts on each block as a spin-`N/2` rotation by `-2θ` about `y`, so its
//! matrix elements are Wigner small-d elements.

use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingAngles {
    pub theta: f64,
    pub psi0: f64,
    pub psi1: f64,
}

/// Fock basis of two truncated modes, `|n₁ n₂⟩ ↦ n₁·M₂ + n₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoModeBasis {
    pub m1: usize,
    pub m2: usize,
}

impl TwoModeBasis {
    pub fn new(m1: usize, m2: usize) -> Self {
        Self { m1, m2 }
    }

    pub fn dim(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * self.m2 + n2
    }

    pub fn occupation(&self, idx: usize) -> (usize, usize) {
        (idx / self.m2, idx % self.m2)
    }

    /// Highest total photon number present in the truncated space.
    pub fn max_total(&self) -> usize {
        self.m1 + self.m2 - 2
    }

    /// Every `(p₁, p₂)` with `p₁ + p₂ ≤ max_total`: the union of the complete
    /// photon-number blocks reachable from the truncated space.
    pub fn extended_states(&self) -> Vec<(usize, usize)> {
        let nmax = self.max_total();
        (0..=nmax)
            .flat_map(|p1| (0..=nmax - p1).map(move |p2| (p1, p2)))
            .collect()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `⟨p₁ p₂| B(θ) |n₁ n₂⟩`.
pub fn beam_splitter_element(theta: f64, p: (usize, usize), n: (usize, usize)) -> f64 {
    let (p1, p2) = p;
    let (n1, n2) = n;
    if p1 + p2 != n1 + n2 {
        return 0.0;
    }
    let total = n1 + n2;
    // d^j_{m'm}(β) with β = -2θ: cos(β/2) = cosθ, sin(β/2) = -sinθ.
    let c = theta.cos();
    let s = -theta.sin();
    let norm = (factorial(p1) * factorial(p2) * factorial(n1) * factorial(n2)).sqrt();
    let lo = n1.saturating_sub(p1);
    let hi = n1.min(p2);
    let mut acc = 0.0;
    for k in lo..=hi {
        let sign_exp = p1 + k - n1;
        let sign = if sign_exp % 2 == 0 { 1.0 } else { -1.0 };
        let denom = factorial(n1 - k) * factorial(k) * factorial(p1 + k - n1) * factorial(p2 - k);
        let cos_exp = (total + n1 - p1 - 2 * k) as i32;
        let sin_exp = (p1 + 2 * k - n1) as i32;
        acc += sign * c.powi(cos_exp) * s.powi(sin_exp) / denom;
    }
    acc * norm
}

/// `⟨p₁ p₂| Û |n₁ n₂⟩`.
pub fn unitary_element(a: MixingAngles, p: (usize, usize), n: (usize, usize)) -> C64 {
    let b = beam_splitter_element(a.theta, p, n);
    if b == 0.0 {
        return ZERO;
    }
    let phase = -(a.psi0 * n.0 as f64 + a.psi1 * n.1 as f64);
    C64::from_polar(b, phase)
}

/// `Û` restricted to the truncated space (unitary on complete blocks).
pub fn twomode_unitary(a: MixingAngles, basis: TwoModeBasis) -> ComplexMatrix {
    let d = basis.dim();
    ComplexMatrix::from_fn(d, d, |r, c| {
        unitary_element(a, basis.occupation(r), basis.occupation(c))
    })
}

/// `⟨p| Û |n⟩` with `p` over [`TwoModeBasis::extended_states`] (rows) and
/// `n` over the truncated space (columns). Columns are exactly normalized.
pub fn twomode_unitary_extended(a: MixingAngles, basis: TwoModeBasis) -> ComplexMatrix {
    let ext = basis.extended_states();
    ComplexMatrix::from_fn(ext.len(), basis.dim(), |r, c| {
        unitary_element(a, ext[r], basis.occupation(c))
    })
}
