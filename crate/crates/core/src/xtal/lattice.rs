use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::XtalError;

/// Lattice whose rows are the cell vectors in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Lattice {
    rows: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl Lattice {
    pub fn new(rows: [[f64; 3]; 3]) -> Result<Self, XtalError> {
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(XtalError::format("lattice.matrix", "non-finite entry"));
        }
        let m = Matrix3::from_fn(|r, c| rows[r][c]);
        let det = m.determinant();
        let scale: f64 = (0..3).map(|r| m.row(r).norm()).product();
        if scale == 0.0 || det.abs() <= 1e-10 * scale {
            return Err(XtalError::format(
                "lattice.matrix",
                format!("degenerate lattice (determinant {det:e})"),
            ));
        }
        let inverse = m.try_inverse().ok_or_else(|| {
            XtalError::format("lattice.matrix", "degenerate lattice (not invertible)")
        })?;
        Ok(Self { rows: m, inverse })
    }

    pub fn cubic(a: f64) -> Result<Self, XtalError> {
        Self::new([[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]])
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.rows;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.rows
    }

    pub fn volume(&self) -> f64 {
        self.rows.determinant().abs()
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|r| self.rows.row(r).norm())
    }

    /// Angles (alpha, beta, gamma) in degrees.
    pub fn angles(&self) -> [f64; 3] {
        let v = [0, 1, 2].map(|r| self.rows.row(r).transpose());
        let ang = |a: &Vector3<f64>, b: &Vector3<f64>| {
            (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
        };
        [ang(&v[1], &v[2]), ang(&v[0], &v[2]), ang(&v[0], &v[1])]
    }

    /// Distance between opposite faces of the cell along each lattice direction.
    pub fn plane_spacings(&self) -> [f64; 3] {
        let v = [0, 1, 2].map(|r| self.rows.row(r).transpose());
        let vol = self.volume();
        [
            vol / v[1].cross(&v[2]).norm(),
            vol / v[2].cross(&v[0]).norm(),
            vol / v[0].cross(&v[1]).norm(),
        ]
    }

    pub fn to_cartesian(&self, frac: &Vector3<f64>) -> Vector3<f64> {
        self.rows.transpose() * frac
    }

    pub fn to_fractional(&self, cart: &Vector3<f64>) -> Vector3<f64> {
        self.inverse.transpose() * cart
    }

    /// Lattice with each row multiplied by the matching factor.
    pub fn scaled_rows(&self, factors: [f64; 3]) -> Result<Self, XtalError> {
        let mut rows = self.rows();
        for (row, f) in rows.iter_mut().zip(factors) {
            for x in row.iter_mut() {
                *x *= f;
            }
        }
        Self::new(rows)
    }
}

impl TryFrom<[[f64; 3]; 3]> for Lattice {
    type Error = XtalError;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, Self::Error> {
        Self::new(rows)
    }
}

impl From<Lattice> for [[f64; 3]; 3] {
    fn from(l: Lattice) -> Self {
        l.rows()
    }
}
