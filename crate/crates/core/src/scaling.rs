//! Affine normalization of inputs and targets.
//!
//! Inputs are mapped onto the unit box spanned by the training data; targets are
//! centered at their mean and divided by their range. All fitting happens in these
//! coordinates: raw monomials of process variables such as furnace temperatures
//! around 900 reach 1e17 at degree six and leave the least-squares Hessian
//! numerically singular.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::globalopt::SearchBox;

/// `scaled = (raw - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub offset: f64,
    pub scale: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        offset: 0.0,
        scale: 1.0,
    };

    pub fn forward(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }

    pub fn inverse(&self, scaled: f64) -> f64 {
        scaled * self.scale + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    maps: Vec<AffineMap>,
    /// Raw data range per direction; zero for degenerate directions.
    widths: Vec<f64>,
}

impl InputScaling {
    /// `x_j -> (x_j - a_j) / (b_j - a_j)` with `[a_j, b_j]` the data range.
    /// Directions without spread keep unit scale and collapse to the point 0.
    pub fn from_dataset(data: &Dataset) -> Self {
        let (maps, widths) = (0..data.dim())
            .map(|j| {
                let (lo, hi) = data.input_range(j);
                let width = hi - lo;
                let scale = if width > 0.0 { width } else { 1.0 };
                (AffineMap { offset: lo, scale }, width.max(0.0))
            })
            .unzip();
        Self { maps, widths }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            maps: vec![AffineMap::IDENTITY; dim],
            widths: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn width(&self, j: usize) -> f64 {
        self.widths[j]
    }

    pub fn scale(&self, j: usize) -> f64 {
        self.maps[j].scale
    }

    pub fn forward(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.maps).map(|(v, m)| m.forward(*v)).collect()
    }

    pub fn inverse(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(&self.maps)
            .map(|(v, m)| m.inverse(*v))
            .collect()
    }

    /// Image of the data box: `[0, 1]` per direction, `[0, 0]` where the data has no spread.
    pub fn unit_box(&self) -> SearchBox {
        let upper = self
            .widths
            .iter()
            .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
            .collect();
        SearchBox::new(vec![0.0; self.dim()], upper).expect("valid unit box")
    }

    /// The data box in raw units.
    pub fn raw_box(&self) -> SearchBox {
        let lower = self.maps.iter().map(|m| m.offset).collect();
        let upper = self
            .maps
            .iter()
            .zip(&self.widths)
            .map(|(m, w)| m.offset + w)
            .collect();
        SearchBox::new(lower, upper).expect("valid raw box")
    }
}

/// Centering by the mean and division by the range (unit scale for constant targets).
pub fn target_scaling(data: &Dataset) -> AffineMap {
    let (lo, hi) = data.target_range();
    let range = hi - lo;
    AffineMap {
        offset: data.target_mean(),
        scale: if range > 0.0 { range } else { 1.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_data_box_to_unit_box() {
        let d = Dataset::new(
            vec![vec![871.0, 2.0], vec![933.0, 2.0], vec![900.0, 2.0]],
            vec![1.0, 2.0, 6.0],
        )
        .unwrap();
        let s = InputScaling::from_dataset(&d);
        assert_eq!(s.forward(&[871.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(s.forward(&[933.0, 2.0]), vec![1.0, 0.0]);
        assert_eq!(s.unit_box().upper(), &[1.0, 0.0]);
        assert_eq!(s.raw_box().upper(), &[933.0, 2.0]);
        let back = s.inverse(&s.forward(&[900.0, 2.0]));
        assert!((back[0] - 900.0).abs() < 1e-12);

        let t = target_scaling(&d);
        assert_eq!(t.offset, 3.0);
        assert_eq!(t.scale, 5.0);
        assert_eq!(t.forward(8.0), 1.0);
    }

    #[test]
    fn constant_targets_keep_unit_scale() {
        let d = Dataset::new(vec![vec![0.0], vec![1.0]], vec![4.0, 4.0]).unwrap();
        let t = target_scaling(&d);
        assert_eq!(t.scale, 1.0);
        assert_eq!(t.forward(4.0), 0.0);
    }
}
