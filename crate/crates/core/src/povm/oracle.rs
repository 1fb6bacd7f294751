//! Dense POVM matrices built by direct numerical integration of the
//! Gaussian-smeared quadrature projector. Test-scale only; serves as an
//! independent check of the positive forms.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{ComplexMatrix, C64};

use super::hermite::hermite_psi_all;
use super::twomode::{twomode_unitary_extended, MixingAngles};
use super::{spin_coherent, MeasurementRecord, PositiveForm, SchemeConfig};

/// `⟨m|Ĥ(x;φ)|n⟩ = ∫dx' [π(1-η)]^{-1/2} e^{-(x-√η x')²/(1-η)} ψ_m(x')ψ_n(x') e^{i(m-n)φ}`
/// on the standard grid for `dim`, Simpson-weighted.
pub fn homodyne_oracle(x: f64, phi: f64, eta: f64, dim: usize) -> Result<ComplexMatrix> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(
            "the integral oracle needs 0 < η < 1 (η = 1 is a Dirac kernel)".into(),
        ));
    }
    let grid = Grid::standard(dim);
    let norm = 1.0 / (PI * (1.0 - eta)).sqrt();
    let mut real = vec![0.0; dim * dim];
    for (&xp, &w) in grid.x.iter().zip(&grid.weights) {
        let d = x - eta.sqrt() * xp;
        let k = w * norm * (-d * d / (1.0 - eta)).exp();
        if k == 0.0 {
            continue;
        }
        let psi = hermite_psi_all(dim, xp);
        for m in 0..dim {
            for n in 0..dim {
                real[m * dim + n] += k * psi[m] * psi[n];
            }
        }
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |m, n| {
        C64::from_polar(real[m * dim + n], (m as f64 - n as f64) * phi)
    }))
}

/// Dense POVM element for a record.
pub fn povm_matrix_oracle(rec: &MeasurementRecord, cfg: &SchemeConfig) -> Result<ComplexMatrix> {
    match *rec {
        MeasurementRecord::Homodyne1 { x, phi } => homodyne_oracle(x, phi, cfg.eta, cfg.dim()),
        MeasurementRecord::Homodyne2 { x, theta, psi0, psi1 } => {
            let basis = cfg
                .two_mode_basis()
                .ok_or_else(|| Error::InvalidParameter("homodyne2 needs per-mode cutoffs".into()))?;
            let ext = basis.extended_states();
            let nmax = basis.max_total();
            let h1 = homodyne_oracle(x, 0.0, cfg.eta, nmax + 1)?;
            let u = twomode_unitary_extended(MixingAngles { theta, psi0, psi1 }, basis);
            // (H₁ ⊗ I) on the extended space, then Û† (·) Û.
            let h_ext = ComplexMatrix::from_fn(ext.len(), ext.len(), |r, c| {
                let (p1, p2) = ext[r];
                let (q1, q2) = ext[c];
                if p2 == q2 {
                    h1[(p1, q1)]
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            u.adjoint().matmul(&h_ext)?.matmul(&u)
        }
        MeasurementRecord::Spinpair { omega_a, omega_b } => {
            let a = spin_coherent(omega_a);
            let b = spin_coherent(omega_b);
            let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
            Ok(ComplexMatrix::outer(&v, &v))
        }
        MeasurementRecord::Spin { omega } => {
            Ok(PositiveForm::rank_one(spin_coherent(omega).to_vec()).matrix())
        }
    }
}
