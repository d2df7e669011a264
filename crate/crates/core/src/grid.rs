//! Uniform grids on a truncated interval and the finite-difference matrices
//! that stand in for d/dx and d²/dx².
//!
//! The endpoints `x_min` and `x_max` are not grid points: every function is
//! taken to vanish there (Dirichlet truncation). Stencil rows that would reach
//! past an endpoint are simply cut, which keeps the first-derivative matrix
//! exactly antisymmetric and the second-derivative matrix exactly symmetric.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of interior points.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    h: f64,
    points: Vec<f64>,
}

/// Uniform grid of `n` interior points on `(x_min, x_max)` with spacing
/// `h = (x_max - x_min) / (n + 1)`.
pub fn make_grid(x_min: f64, x_max: f64, n: usize) -> Result<Grid> {
    if !(x_min.is_finite() && x_max.is_finite()) {
        return Err(Error::config(format!(
            "grid bounds must be finite (got [{x_min}, {x_max}])"
        )));
    }
    if x_min >= x_max {
        return Err(Error::config(format!(
            "grid requires x_min < x_max (got [{x_min}, {x_max}])"
        )));
    }
    if n < MIN_POINTS {
        return Err(Error::config(format!(
            "grid requires at least {MIN_POINTS} interior points (got {n})"
        )));
    }
    let h = (x_max - x_min) / (n as f64 + 1.0);
    let points = (0..n).map(|j| x_min + (j as f64 + 1.0) * h).collect();
    Ok(Grid {
        x_min,
        x_max,
        h,
        points,
    })
}

impl Grid {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// The grid on the same interval whose spacing is exactly half of this one.
    pub fn refined(&self) -> Grid {
        let n = 2 * (self.len() + 1) - 1;
        make_grid(self.x_min, self.x_max, n).expect("refinement of a valid grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Central2,
    Central4,
}

impl Scheme {
    /// Stencil half-width; also the width of the boundary band polluted by truncation.
    pub fn half_width(self) -> usize {
        match self {
            Scheme::Central2 => 1,
            Scheme::Central4 => 2,
        }
    }

    pub fn formal_order(self) -> u32 {
        match self {
            Scheme::Central2 => 2,
            Scheme::Central4 => 4,
        }
    }

    /// Stencil weights for offsets `-w..=w`, before division by `h` or `h²`.
    fn weights(self, order: DerivativeOrder) -> &'static [f64] {
        match (self, order) {
            (Scheme::Central2, DerivativeOrder::First) => &[-0.5, 0.0, 0.5],
            (Scheme::Central2, DerivativeOrder::Second) => &[1.0, -2.0, 1.0],
            (Scheme::Central4, DerivativeOrder::First) => {
                &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0]
            }
            (Scheme::Central4, DerivativeOrder::Second) => &[
                -1.0 / 12.0,
                16.0 / 12.0,
                -30.0 / 12.0,
                16.0 / 12.0,
                -1.0 / 12.0,
            ],
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Central2 => write!(f, "central2"),
            Scheme::Central4 => write!(f, "central4"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiffMatrix {
    pub order: DerivativeOrder,
    pub scheme: Scheme,
    pub matrix: Mat<f64>,
    pub grid: Grid,
}

/// Banded finite-difference matrix for the requested derivative.
pub fn diff_matrix(grid: &Grid, order: DerivativeOrder, scheme: Scheme) -> DiffMatrix {
    let n = grid.len();
    let scale = match order {
        DerivativeOrder::First => 1.0 / grid.h,
        DerivativeOrder::Second => 1.0 / (grid.h * grid.h),
    };
    let weights = scheme.weights(order);
    let w = scheme.half_width() as isize;
    let mut matrix = Mat::<f64>::zeros(n, n);
    for row in 0..n as isize {
        for (offset, &weight) in (-w..=w).zip(weights) {
            let col = row + offset;
            if weight != 0.0 && (0..n as isize).contains(&col) {
                matrix[(row as usize, col as usize)] = weight * scale;
            }
        }
    }
    DiffMatrix {
        order,
        scheme,
        matrix,
        grid: grid.clone(),
    }
}

impl DiffMatrix {
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        crate::linalg::mat_vec(&self.matrix, values)
    }

    /// Rows whose stencil does not reach past either endpoint.
    pub fn interior_rows(&self) -> std::ops::Range<usize> {
        let w = self.scheme.half_width();
        w..self.grid.len().saturating_sub(w)
    }
}
