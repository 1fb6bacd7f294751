//! Harmonic-oscillator eigenfunctions and the loss-channel weights.

use std::f64::consts::PI;

/// `ψ_0(x) ... ψ_{count-1}(x)` by the normalized three-term recurrence.
pub fn hermite_psi_all(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(2f64.sqrt() * x * psi0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// `⟨n|x⟩`, the `n`-th normalized Hermite function.
pub fn hermite_psi(n: usize, x: f64) -> f64 {
    hermite_psi_all(n + 1, x)[n]
}

/// `B_{n+j,n} = [C(n+j, n) ηⁿ (1-η)^j]^{1/2}`, evaluated in log space.
pub fn bcoeff(n: usize, j: usize, eta: f64) -> f64 {
    let ln_binom: f64 = (1..=j).map(|k| ((n + k) as f64 / k as f64).ln()).sum();
    let ln_eta = if n == 0 { 0.0 } else { n as f64 * eta.ln() };
    let ln_loss = if j == 0 {
        0.0
    } else if eta >= 1.0 {
        return 0.0;
    } else {
        j as f64 * (1.0 - eta).ln()
    };
    (0.5 * (ln_binom + ln_eta + ln_loss)).exp()
}
