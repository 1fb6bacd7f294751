//! CSV tables of density-matrix elements and comparison metrics.

use std::fmt::Write;

use crate::error::Result;
use crate::linalg::{fidelity, trace_distance, DensityMatrix};
use crate::states::PureState;
use crate::uncertainty::CovarianceReport;

/// `(re.csv, im.csv)` contents with `row,col,value[,std]` lines.
pub fn density_csv(rho: &DensityMatrix, errors: Option<&CovarianceReport>) -> (String, String) {
    let dim = rho.dim();
    let m = rho.matrix();
    let header = if errors.is_some() { "row,col,value,std\n" } else { "row,col,value\n" };
    let mut re = String::from(header);
    let mut im = String::from(header);
    for a in 0..dim {
        for b in 0..dim {
            let z = m[(a, b)];
            match errors {
                Some(e) => {
                    let _ = writeln!(re, "{a},{b},{},{}", z.re, e.std_re[a][b]);
                    let _ = writeln!(im, "{a},{b},{},{}", z.im, e.std_im[a][b]);
                }
                None => {
                    let _ = writeln!(re, "{a},{b},{}", z.re);
                    let _ = writeln!(im, "{a},{b},{}", z.im);
                }
            }
        }
    }
    (re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMetrics {
    pub fidelity: f64,
    pub trace_distance: f64,
}

pub fn target_metrics(rho: &DensityMatrix, target: &PureState) -> Result<TargetMetrics> {
    Ok(TargetMetrics {
        fidelity: fidelity(rho, target.amplitudes())?,
        trace_distance: trace_distance(rho, &target.density())?,
    })
}

pub fn metrics_csv(m: &TargetMetrics) -> String {
    format!("fidelity,trace_distance\n{},{}\n", m.fidelity, m.trace_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::states::singlet;

    #[test]
    fn singlet_table() {
        let s = singlet();
        let (re, im) = density_csv(&s.density(), None);
        let lines: Vec<&str> = re.lines().collect();
        assert_eq!(lines[0], "row,col,value");
        assert_eq!(lines.len(), 17);
        let val = |a: usize, b: usize| -> f64 { lines[1 + 4 * a + b].rsplit(',').next().unwrap().parse().unwrap() };
        assert!((val(1, 1) - 0.5).abs() < 1e-15);
        assert!((val(2, 2) - 0.5).abs() < 1e-15);
        assert!((val(1, 2) + 0.5).abs() < 1e-15);
        assert!(im.lines().skip(1).all(|l| l.ends_with(",0") || l.ends_with(",-0")));
        let m = target_metrics(&s.density(), &s).unwrap();
        assert!((m.fidelity - 1.0).abs() < 1e-12 && m.trace_distance < 1e-7);
    }

    #[test]
    fn std_column() {
        let rho = DensityMatrix::from_pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let rep = CovarianceReport {
            g: vec![],
            u: vec![],
            v: vec![],
            std_re: vec![vec![0.1, 0.2], vec![0.2, 0.3]],
            std_im: vec![vec![0.0, 0.4], vec![0.4, 0.0]],
            condition_number: 1.0,
            null_directions: 0,
        };
        let (re, im) = density_csv(&rho, Some(&rep));
        assert!(re.starts_with("row,col,value,std\n0,0,1,0.1\n"));
        assert!(im.contains("0,1,0,0.4"));
    }
}
