//! Uniform quadrature grid shared by the simulator and the numerical oracles.

/// Number of nodes of the standard grid.
pub const STANDARD_POINTS: usize = 4001;

/// Uniform grid on `[-half_width, half_width]` with composite Simpson weights.
#[derive(Debug, Clone)]
pub struct Grid {
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
    pub step: f64,
}

impl Grid {
    /// `points` must be odd and at least 3.
    pub fn uniform(half_width: f64, points: usize) -> Self {
        assert!(points >= 3 && points % 2 == 1, "Simpson rule needs an odd node count");
        let step = 2.0 * half_width / (points - 1) as f64;
        let x = (0..points).map(|i| -half_width + step * i as f64).collect();
        let weights = (0..points)
            .map(|i| {
                let w = if i == 0 || i == points - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * step / 3.0
            })
            .collect();
        Self { x, weights, step }
    }

    /// Range `±(√(2M) + 4)`, 4001 nodes: covers the classically allowed
    /// region of the Fock state `|M-1⟩` plus Gaussian tails.
    pub fn standard(dim: usize) -> Self {
        Self::uniform((2.0 * dim as f64).sqrt() + 4.0, STANDARD_POINTS)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let g = Grid::uniform(2.0, 11);
        let v = g.integrate(|x| x * x * x + 3.0 * x * x - 1.0);
        assert!((v - (16.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_normalizes_on_standard_grid() {
        let g = Grid::standard(4);
        let v = g.integrate(|x| (-x * x).exp() / std::f64::consts::PI.sqrt());
        assert!((v - 1.0).abs() < 1e-12);
    }
}
