//! Finite-difference first derivatives on uniform grids.
//!
//! Stencil weights come from Fornberg's algorithm, so the interior and the
//! one-sided boundary stencils are all exact for polynomials up to the
//! stencil degree.

use num_complex::Complex64;

/// Fornberg weights: given nodes `x` and an evaluation point `z`, returns
/// weights w such that f^(d)(z) ~ sum_j w\[d\]\[j\] f(x_j), for
/// d = 0..=max_order.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    assert!(n > max_order, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First-derivative operator of order `2*half_width` on a uniform grid,
/// with one-sided stencils of the same polynomial degree near the edges.
#[derive(Debug, Clone)]
pub struct UniformDerivative {
    half_width: usize,
    /// weights for the centered interior stencil, offsets -hw..=hw
    interior: Vec<f64>,
    /// weights for rows 0..hw (nodes 0..=2hw each); mirrored for the right edge
    left: Vec<Vec<f64>>,
    inv_h: f64,
}

impl UniformDerivative {
    pub fn new(half_width: usize, h: f64) -> Self {
        assert!(half_width >= 1 && h > 0.0);
        let width = 2 * half_width + 1;
        let nodes: Vec<f64> = (0..width).map(|j| j as f64).collect();
        let interior = fornberg_weights(half_width as f64, &nodes, 1)[1].clone();
        let left = (0..half_width)
            .map(|r| fornberg_weights(r as f64, &nodes, 1)[1].clone())
            .collect();
        Self {
            half_width,
            interior,
            left,
            inv_h: 1.0 / h,
        }
    }

    /// Standard 8th-order variant.
    pub fn order8(h: f64) -> Self {
        Self::new(4, h)
    }

    /// d/dx of complex samples on the uniform grid.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = f.len();
        let hw = self.half_width;
        let width = 2 * hw + 1;
        assert!(n >= width, "grid shorter than the stencil");
        let mut out = vec![Complex64::default(); n];
        for (r, row) in self.left.iter().enumerate() {
            let mut acc = Complex64::default();
            for (j, &w) in row.iter().enumerate() {
                acc += w * f[j];
            }
            out[r] = acc * self.inv_h;
            // mirrored one-sided stencil at the right edge (antisymmetric)
            let mut acc = Complex64::default();
            for (j, &w) in row.iter().enumerate() {
                acc -= w * f[n - 1 - j];
            }
            out[n - 1 - r] = acc * self.inv_h;
        }
        for i in hw..n - hw {
            let mut acc = Complex64::default();
            for (j, &w) in self.interior.iter().enumerate() {
                acc += w * f[i + j - hw];
            }
            out[i] = acc * self.inv_h;
        }
        out
    }
}
