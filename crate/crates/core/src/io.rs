//! File formats: JSONL record files, result and error-bar JSON.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimationResult;
use crate::linalg::{factor_to_density, params_to_factor, DensityMatrix, ParamVector};
use crate::povm::{Cutoffs, MeasurementRecord, Scheme, SchemeConfig};
use crate::states::StateSpec;

/// First line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub scheme: Scheme,
    pub eta: f64,
    pub cutoff: Cutoffs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_state: Option<StateSpec>,
}

impl RecordHeader {
    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        SchemeConfig {
            scheme: self.scheme,
            eta: self.eta,
            cutoff: self.cutoff,
        }
        .validated()
    }
}

pub fn write_records<W: Write>(mut w: W, header: &RecordHeader, records: &[MeasurementRecord]) -> Result<()> {
    if header.n != records.len() {
        return Err(Error::Format(format!(
            "header announces {} records, {} given",
            header.n,
            records.len()
        )));
    }
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a record file: header first, then exactly `n`
/// records of the header's scheme. Blank lines are ignored.
pub fn read_records<R: BufRead>(r: R) -> Result<(RecordHeader, Vec<MeasurementRecord>)> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::Format("empty record file".into()))?;
    let header: RecordHeader =
        serde_json::from_str(&first?).map_err(|e| Error::Format(format!("line 1: bad header: {e}")))?;
    let cfg = header.scheme_config()?;
    let mut records = Vec::with_capacity(header.n);
    for (i, line) in lines {
        let rec: MeasurementRecord =
            serde_json::from_str(&line?).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        if rec.scheme() != cfg.scheme {
            return Err(Error::SchemeMismatch {
                expected: cfg.scheme.to_string(),
                got: rec.scheme().to_string(),
            });
        }
        rec.validate().map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    if records.len() != header.n {
        return Err(Error::Format(format!(
            "header announces {} records, file has {}",
            header.n,
            records.len()
        )));
    }
    Ok((header, records))
}

/// Serialized estimation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub params: Vec<f64>,
}

impl From<&EstimationResult> for EstimateFile {
    fn from(r: &EstimationResult) -> Self {
        let m = r.density.matrix();
        let dim = r.density.dim();
        Self {
            rho_re: (0..dim).map(|a| (0..dim).map(|b| m[(a, b)].re).collect()).collect(),
            rho_im: (0..dim).map(|a| (0..dim).map(|b| m[(a, b)].im).collect()).collect(),
            loglik: r.loglik,
            iterations: r.iterations,
            converged: r.converged,
            params: r.params.as_slice().to_vec(),
        }
    }
}

impl EstimateFile {
    pub fn dim(&self) -> usize {
        self.rho_re.len()
    }

    pub fn params(&self) -> Result<ParamVector> {
        ParamVector::new(self.dim(), self.params.clone())
    }

    /// Density matrix rebuilt from the stored parameters.
    pub fn density(&self) -> Result<DensityMatrix> {
        factor_to_density(&params_to_factor(&self.params()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{mle_estimate, OptimizerConfig};
    use crate::povm::BlochDirection;

    fn header(n: usize) -> RecordHeader {
        RecordHeader {
            scheme: Scheme::Spin,
            eta: 1.0,
            cutoff: Cutoffs::Single(2),
            seed: None,
            n,
            true_state: None,
        }
    }

    #[test]
    fn round_trip() {
        let recs = vec![
            MeasurementRecord::Spin { omega: BlochDirection::PLUS_Z },
            MeasurementRecord::Spin { omega: BlochDirection::new(1.0, 2.0).unwrap() },
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &header(2), &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(r#"{"scheme":"spin","eta":1.0,"cutoff":2,"n":2}"#), "{text}");
        let (h, back) = read_records(&buf[..]).unwrap();
        assert_eq!(h, header(2));
        assert_eq!(back, recs);
    }

    #[test]
    fn header_with_state_and_pair_cutoff() {
        let h = RecordHeader {
            scheme: Scheme::Homodyne2,
            eta: 0.9,
            cutoff: Cutoffs::PerMode(2, 2),
            seed: Some(5),
            n: 0,
            true_state: Some(StateSpec::Singlet),
        };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(
            s,
            r#"{"scheme":"homodyne2","eta":0.9,"cutoff":[2,2],"seed":5,"n":0,"true_state":{"type":"singlet"}}"#
        );
        assert_eq!(serde_json::from_str::<RecordHeader>(&s).unwrap(), h);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_records(&b""[..]).is_err());
        let wrong_count = "{\"scheme\":\"spin\",\"eta\":1.0,\"cutoff\":2,\"n\":2}\n{\"scheme\":\"spin\",\"omega\":[0.0,0.0]}\n";
        assert!(matches!(read_records(wrong_count.as_bytes()), Err(Error::Format(_))));
        let wrong_scheme =
            "{\"scheme\":\"spin\",\"eta\":1.0,\"cutoff\":2,\"n\":1}\n{\"scheme\":\"homodyne1\",\"x\":0.1,\"phi\":0.0}\n";
        assert!(matches!(read_records(wrong_scheme.as_bytes()), Err(Error::SchemeMismatch { .. })));
        let bad_cutoff = "{\"scheme\":\"spin\",\"eta\":1.0,\"cutoff\":3,\"n\":0}\n";
        assert!(read_records(bad_cutoff.as_bytes()).is_err());
        let garbage = "{\"scheme\":\"spin\",\"eta\":1.0,\"cutoff\":2,\"n\":1}\nnot json\n";
        assert!(matches!(read_records(garbage.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn estimate_file_round_trip() {
        let recs = vec![
            MeasurementRecord::Spin { omega: BlochDirection::PLUS_Z },
            MeasurementRecord::Spin { omega: BlochDirection::MINUS_Z },
            MeasurementRecord::Spin { omega: BlochDirection::new(1.2, 0.4).unwrap() },
        ];
        let res = mle_estimate(&recs, &SchemeConfig::spin(), &OptimizerConfig::default()).unwrap();
        let file = EstimateFile::from(&res);
        let json = serde_json::to_string(&file).unwrap();
        for key in ["rho_re", "rho_im", "loglik", "iterations", "converged", "params"] {
            assert!(json.contains(&format!("\"{key}\"")));
        }
        let back: EstimateFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        let rho = back.density().unwrap();
        assert!(rho.matrix().sub(res.density.matrix()).unwrap().max_abs() < 1e-15);
    }
}
