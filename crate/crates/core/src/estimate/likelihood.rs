use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::linalg::{offdiag_offset, params_to_factor, ParamVector, C64};
use crate::povm::{MeasurementRecord, PositiveForm, SchemeConfig};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-300;

/// Log-likelihood `L(t) = Σᵢ ln Tr(T†T Fᵢ) − N·Tr(T†T)` over a fixed data set.
///
/// Each record's POVM element is converted to a positive form once, so an
/// evaluation costs one triangular mat-vec per form vector.
#[derive(Debug, Clone)]
pub struct Likelihood {
    dim: usize,
    forms: Vec<PositiveForm>,
    exec: Exec,
}

impl Likelihood {
    pub fn new(records: &[MeasurementRecord], cfg: &SchemeConfig, exec: Exec) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyRecords);
        }
        let cfg = cfg.validated()?;
        let forms = exec::map(exec, records.len(), |i| {
            records[i].validate()?;
            records[i].positive_form(&cfg)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_forms(cfg.dim(), forms, exec))
    }

    pub fn from_forms(dim: usize, forms: Vec<PositiveForm>, exec: Exec) -> Self {
        Self { dim, forms, exec }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[PositiveForm] {
        &self.forms
    }

    fn check(&self, t: &ParamVector) -> Result<()> {
        if t.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: t.dim(),
            });
        }
        if t.gram_trace() == 0.0 {
            return Err(Error::DegenerateFactor);
        }
        Ok(())
    }

    /// `Σᵢ ln pᵢ` alone, without the Lagrange term.
    pub fn log_sum(&self, t: &ParamVector) -> Result<f64> {
        self.check(t)?;
        let f = params_to_factor(t);
        Ok(exec::chunked_sum(self.exec, self.n(), |r| {
            self.forms[r]
                .iter()
                .map(|form| form.probability(&f).max(PROB_FLOOR).ln())
                .sum()
        }))
    }

    pub fn value(&self, t: &ParamVector) -> Result<f64> {
        Ok(self.log_sum(t)? - self.n() as f64 * t.gram_trace())
    }

    /// `(L, ∇L)`. Records whose probability is clamped contribute to `L`
    /// through the floor but not to the gradient.
    pub fn value_and_gradient(&self, t: &ParamVector) -> Result<(f64, Vec<f64>)> {
        self.check(t)?;
        let dim = self.dim;
        let len = dim * dim;
        let f = params_to_factor(t);
        let tm = f.matrix();
        // slot `len` carries Σ ln p alongside the gradient
        let acc = exec::chunked_sum_vec(self.exec, self.n(), len + 1, |r, buf| {
            let mut ws: Vec<C64> = Vec::new();
            for form in &self.forms[r] {
                ws.clear();
                let mut p = 0.0;
                for (start, tail) in form.vectors() {
                    for k in start..dim {
                        let row = &tm.row(k)[start..=k];
                        let w: C64 = row.iter().zip(tail).map(|(a, b)| a * b).sum();
                        p += w.norm_sqr();
                        ws.push(w);
                    }
                }
                if p < PROB_FLOOR {
                    buf[len] += PROB_FLOOR.ln();
                    continue;
                }
                buf[len] += p.ln();
                let scale = 2.0 / p;
                let mut wi = 0;
                for (start, tail) in form.vectors() {
                    for k in start..dim {
                        let wk = ws[wi].conj() * scale;
                        wi += 1;
                        for (m, vm) in tail.iter().enumerate().take(k - start + 1) {
                            let m = start + m;
                            let g = wk * vm;
                            if m == k {
                                buf[k] += g.re;
                            } else {
                                let o = offdiag_offset(dim, k, m);
                                buf[o] += g.re;
                                buf[o + 1] -= g.im;
                            }
                        }
                    }
                }
            }
        });
        let n = self.n() as f64;
        let ts = t.as_slice();
        let grad = (0..len).map(|i| acc[i] - 2.0 * n * ts[i]).collect();
        Ok((acc[len] - n * t.gram_trace(), grad))
    }

    pub fn gradient(&self, t: &ParamVector) -> Result<Vec<f64>> {
        self.value_and_gradient(t).map(|(_, g)| g)
    }
}

/// `L(t)` for a record set, building the positive forms on the fly.
pub fn log_likelihood(t: &ParamVector, records: &[MeasurementRecord], cfg: &SchemeConfig) -> Result<f64> {
    Likelihood::new(records, cfg, Exec::default())?.value(t)
}

pub fn gradient_log_likelihood(
    t: &ParamVector,
    records: &[MeasurementRecord],
    cfg: &SchemeConfig,
) -> Result<Vec<f64>> {
    Likelihood::new(records, cfg, Exec::default())?.gradient(t)
}
