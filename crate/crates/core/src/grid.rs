//! Uniform square grids in the complex plane and centered finite differences.

use num_complex::Complex64;

use crate::error::{FockError, Result};

/// A uniform square grid on `[-extent, extent]^2`.
///
/// Samples are stored row-major: row `j` runs along the imaginary axis,
/// column `i` along the real axis, so sample `j * n + i` sits at
/// `(-extent + i h) + (-extent + j h) i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub extent: f64,
    pub spacing: f64,
    n: usize,
}

impl Grid {
    pub fn new(extent: f64, spacing: f64) -> Result<Self> {
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(FockError::BadParams(format!("grid extent must be positive, got {extent}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || spacing > extent {
            return Err(FockError::BadParams(format!(
                "grid spacing must be in (0, extent], got {spacing}"
            )));
        }
        let cells = 2.0 * extent / spacing;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(FockError::BadParams(format!(
                "spacing {spacing} does not divide the width {}",
                2.0 * extent
            )));
        }
        Ok(Self { extent, spacing, n: rounded as usize + 1 })
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.coord(i), self.coord(j))
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        self.z(idx % self.n, idx / self.n)
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(move |idx| self.point(idx))
    }

    pub fn sample<F>(&self, f: F) -> Vec<Complex64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        self.points().map(f).collect()
    }

    /// True when `(i, j)` is at least `layer` cells away from every edge.
    pub fn is_interior(&self, idx: usize, layer: usize) -> bool {
        let (i, j) = (idx % self.n, idx / self.n);
        i >= layer && j >= layer && i + layer < self.n && j + layer < self.n
    }
}

/// Centered stencil: coefficients for offsets `-radius..=radius`, to be divided by `h^order`.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub radius: usize,
    pub coeffs: &'static [f64],
}

const D0: [f64; 1] = [1.0];
const D1_O4: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2_O4: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
const D3_O4: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];
const D4_O4: [f64; 7] = [-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0];
const D1_O6: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

/// Fourth-order accurate centered stencil for the derivative of the given order (0..=4).
pub fn stencil_o4(order: usize) -> Stencil {
    match order {
        0 => Stencil { radius: 0, coeffs: &D0 },
        1 => Stencil { radius: 2, coeffs: &D1_O4 },
        2 => Stencil { radius: 2, coeffs: &D2_O4 },
        3 => Stencil { radius: 3, coeffs: &D3_O4 },
        4 => Stencil { radius: 3, coeffs: &D4_O4 },
        _ => panic!("no stencil for derivative order {order}"),
    }
}

/// Sixth-order accurate centered first derivative.
pub fn stencil_d1_o6() -> Stencil {
    Stencil { radius: 3, coeffs: &D1_O6 }
}

/// Applies `sx` along x and `sy` along y at sample `idx`. Returns `None` when
/// the stencil would leave the grid.
pub fn apply_tensor(
    grid: &Grid,
    samples: &[Complex64],
    idx: usize,
    sx: (Stencil, usize),
    sy: (Stencil, usize),
) -> Option<Complex64> {
    let n = grid.n();
    let (i, j) = ((idx % n) as isize, (idx / n) as isize);
    let (rx, ry) = (sx.0.radius as isize, sy.0.radius as isize);
    if i < rx || j < ry || i + rx >= n as isize || j + ry >= n as isize {
        return None;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, cy) in sy.0.coeffs.iter().enumerate() {
        if *cy == 0.0 {
            continue;
        }
        let jj = j + b as isize - ry;
        for (a, cx) in sx.0.coeffs.iter().enumerate() {
            if *cx == 0.0 {
                continue;
            }
            let ii = i + a as isize - rx;
            acc += samples[jj as usize * n + ii as usize] * (cx * cy);
        }
    }
    let h = grid.spacing;
    Some(acc / (h.powi(sx.1 as i32) * h.powi(sy.1 as i32)))
}

/// `∂̄f = (f_x + i f_y) / 2` with sixth-order centered differences; `None` within
/// three cells of the boundary.
pub fn dbar_fd(grid: &Grid, samples: &[Complex64], idx: usize) -> Option<Complex64> {
    let d1 = (stencil_d1_o6(), 1);
    let id = (stencil_o4(0), 0);
    let fx = apply_tensor(grid, samples, idx, d1, id)?;
    let fy = apply_tensor(grid, samples, idx, id, d1)?;
    Some((fx + Complex64::i() * fy) * 0.5)
}
