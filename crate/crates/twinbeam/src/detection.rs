//! Detector masks: irises, slits, straight edges, and uniform attenuators in
//! the far-field plane, with their power transmission against a field.
//!
//! A mask stores one amplitude transmission `t(q) ∈ [0,1]` per pixel;
//! iris/slit/edge masks are binary, attenuators hold a constant
//! `√(power transmission)`. A pixel is inside a binary shape when its center
//! is inside, which keeps mirrored masks exact pixel permutations on the
//! symmetric grids used here.

use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::transverse::{GridDim, ModeField, TransverseGrid};

/// Which far-field coordinate a slit or edge addresses.
///
/// For a slit this names the direction of its long axis (an `Azimuthal`
/// slit selects a narrow polar band and vice versa). For an edge it names
/// the coordinate being thresholded: `Polar` cuts along θx, `Azimuthal`
/// along θy (on a 1D cut both act on the single coordinate).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Polar,
    Azimuthal,
}

/// Which side of an edge survives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeepSide {
    Above,
    Below,
}

/// Shape metadata carried along for experiment logs.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskShape {
    Iris { center: (f64, f64), radius_mrad: f64 },
    Slit { center: (f64, f64), width_mrad: f64, orientation: Orientation },
    Edge { position_mrad: f64, keep: KeepSide, orientation: Orientation },
    Attenuator { power_transmission: f64 },
    Composite { parts: Vec<MaskShape> },
}

/// Real per-pixel amplitude transmission in [0, 1].
#[derive(Clone, Debug)]
pub struct DetectorMask {
    grid: TransverseGrid,
    t: Array1<f64>,
    shape: MaskShape,
}

impl DetectorMask {
    fn from_predicate(
        grid: TransverseGrid,
        shape: MaskShape,
        inside: impl Fn(f64, f64) -> bool,
    ) -> Self {
        let t = Array1::from_shape_fn(grid.n_pixels(), |i| {
            let (x, y) = grid.coords(i);
            if inside(x, y) {
                1.0
            } else {
                0.0
            }
        });
        Self { grid, t, shape }
    }

    /// Binary disc of given radius: t = 1 inside, 0 outside. On a 1D cut the
    /// disc degenerates to the interval |x − cx| ≤ radius.
    pub fn iris(grid: TransverseGrid, center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("iris radius must be positive, got {radius}")));
        }
        let shape = MaskShape::Iris { center, radius_mrad: radius };
        Ok(Self::from_predicate(grid, shape, |x, y| {
            (x - center.0).powi(2) + (y - center.1).powi(2) <= radius * radius
        }))
    }

    /// Binary band of the given full width about the line through `center`
    /// along `orientation`. On a 1D cut any slit is an interval.
    pub fn slit(
        grid: TransverseGrid,
        center: (f64, f64),
        width: f64,
        orientation: Orientation,
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!("slit width must be positive, got {width}")));
        }
        let shape = MaskShape::Slit { center, width_mrad: width, orientation };
        let half = width / 2.0;
        if grid.dim() == GridDim::One {
            return Ok(Self::from_predicate(grid, shape, |x, _| (x - center.0).abs() <= half));
        }
        // 2D: the band runs along the local polar/azimuthal frame at `center`.
        let r = (center.0 * center.0 + center.1 * center.1).sqrt();
        let (rx, ry) = if r > 1e-12 { (center.0 / r, center.1 / r) } else { (1.0, 0.0) };
        Ok(Self::from_predicate(grid, shape, move |x, y| {
            let dx = x - center.0;
            let dy = y - center.1;
            let radial = dx * rx + dy * ry;
            let azimuthal = -dx * ry + dy * rx;
            match orientation {
                // Long axis azimuthal → narrow radially.
                Orientation::Azimuthal => radial.abs() <= half,
                // Long axis polar (radial) → narrow azimuthally.
                Orientation::Polar => azimuthal.abs() <= half,
            }
        }))
    }

    /// Binary half-plane: keeps pixels with the named coordinate above or
    /// below `position`.
    pub fn edge(
        grid: TransverseGrid,
        position: f64,
        keep: KeepSide,
        orientation: Orientation,
    ) -> Self {
        let shape = MaskShape::Edge { position_mrad: position, keep, orientation };
        Self::from_predicate(grid, shape, move |x, y| {
            let c = match (grid.dim(), orientation) {
                (GridDim::One, _) => x,
                (GridDim::Two, Orientation::Polar) => x,
                (GridDim::Two, Orientation::Azimuthal) => y,
            };
            match keep {
                KeepSide::Above => c >= position,
                KeepSide::Below => c <= position,
            }
        })
    }

    /// Constant amplitude transmission √(power_t).
    pub fn attenuator(grid: TransverseGrid, power_t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&power_t) {
            return Err(Error::InvalidArgument(format!(
                "power transmission must lie in [0,1], got {power_t}"
            )));
        }
        let t = Array1::from_elem(grid.n_pixels(), power_t.sqrt());
        Ok(Self { grid, t, shape: MaskShape::Attenuator { power_transmission: power_t } })
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    /// Amplitude transmission per pixel.
    pub fn amplitude(&self) -> &Array1<f64> {
        &self.t
    }

    pub fn shape(&self) -> &MaskShape {
        &self.shape
    }

    /// Pixel-wise product of two masks.
    pub fn compose(&self, other: &DetectorMask) -> Result<DetectorMask> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("composing masks on different grids".into()));
        }
        let t = &self.t * &other.t;
        let shape = MaskShape::Composite { parts: vec![self.shape.clone(), other.shape.clone()] };
        Ok(DetectorMask { grid: self.grid, t, shape })
    }

    /// Mask reflected about an axis through the pump origin.
    pub fn mirrored(&self, axis: crate::transverse::MirrorAxis) -> DetectorMask {
        let t = Array1::from_shape_fn(self.t.len(), |i| self.t[self.grid.mirror_index(i, axis)]);
        DetectorMask { grid: self.grid, t, shape: self.shape.clone() }
    }

    /// Fraction of the field's power passing the mask:
    /// `Σ t²|f|² / Σ |f|²`.
    ///
    /// Terms are accumulated in sorted order, so the result is invariant
    /// under pixel permutations; mirrored mask against mirrored field gives
    /// the bit-identical transmission.
    pub fn power_transmission(&self, field: &ModeField) -> Result<f64> {
        if *field.grid() != self.grid {
            return Err(Error::InvalidArgument("mask and field on different grids".into()));
        }
        let mut num = Vec::with_capacity(self.t.len());
        let mut den = Vec::with_capacity(self.t.len());
        for (t, z) in self.t.iter().zip(field.values().iter()) {
            let p = z.norm_sqr();
            num.push(t * t * p);
            den.push(p);
        }
        let total = sorted_sum(den);
        if !(total.is_finite() && total > 1e-300) {
            return Err(Error::InvalidArgument("power transmission of a zero field".into()));
        }
        Ok(sorted_sum(num) / total)
    }
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transverse::MirrorAxis;
    use approx::assert_abs_diff_eq;

    fn grid() -> TransverseGrid {
        TransverseGrid::new(12.0, 64, GridDim::Two).unwrap()
    }

    #[test]
    fn iris_all_pass_and_analytic_gaussian_transmission() {
        let g = grid();
        let f = ModeField::gaussian(g, (0.0, 0.0), 1.0).unwrap();

        let big = DetectorMask::iris(g, (0.0, 0.0), 40.0).unwrap();
        assert_abs_diff_eq!(big.power_transmission(&f).unwrap(), 1.0, epsilon = 1e-12);

        // Disc of radius = waist: 2D Gaussian integral gives 1 − e⁻².
        // Checked on a fine grid since the pixel-center rule converges O(pitch).
        let gf = TransverseGrid::new(4.0, 512, GridDim::Two).unwrap();
        let w = 1.0;
        let ff = ModeField::gaussian(gf, (0.0, 0.0), w).unwrap();
        let iris = DetectorMask::iris(gf, (0.0, 0.0), w).unwrap();
        let t = iris.power_transmission(&ff).unwrap();
        assert_abs_diff_eq!(t, 1.0 - (-2.0f64).exp(), epsilon = 5e-3);

        assert!(DetectorMask::iris(g, (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn iris_on_1d_cut_is_interval() {
        let g = TransverseGrid::new(12.0, 256, GridDim::One).unwrap();
        let m = DetectorMask::iris(g, (7.0, 0.0), 1.0).unwrap();
        for i in 0..g.n_pixels() {
            let (x, _) = g.coords(i);
            assert_eq!(m.amplitude()[i] > 0.5, (x - 7.0).abs() <= 1.0);
        }
    }

    #[test]
    fn slit_geometry() {
        let g = grid();
        let wide = DetectorMask::slit(g, (0.0, 0.0), 100.0, Orientation::Azimuthal).unwrap();
        assert!(wide.amplitude().iter().all(|&t| t == 1.0));

        // Azimuthally oriented slit at (7, 0): selects |θx − 7| ≤ w/2.
        let s = DetectorMask::slit(g, (7.0, 0.0), 0.8, Orientation::Azimuthal).unwrap();
        for i in 0..g.n_pixels() {
            let (x, _) = g.coords(i);
            assert_eq!(s.amplitude()[i] > 0.5, (x - 7.0).abs() <= 0.4, "pixel {i}");
        }

        // Polar-oriented slit at (7, 0): selects |θy| ≤ w/2.
        let s = DetectorMask::slit(g, (7.0, 0.0), 0.8, Orientation::Polar).unwrap();
        for i in 0..g.n_pixels() {
            let (_, y) = g.coords(i);
            assert_eq!(s.amplitude()[i] > 0.5, y.abs() <= 0.4, "pixel {i}");
        }

        assert!(DetectorMask::slit(g, (0.0, 0.0), -1.0, Orientation::Polar).is_err());
    }

    #[test]
    fn edges_mirror_to_equal_fractions() {
        let g = TransverseGrid::new(12.0, 256, GridDim::One).unwrap();
        let probe = ModeField::gaussian(g, (7.0, 0.0), 1.0).unwrap();
        let conj = probe.mirrored(MirrorAxis::Y);

        // Edge beyond the grid: all-pass / all-block.
        let all = DetectorMask::edge(g, 20.0, KeepSide::Below, Orientation::Polar);
        assert_abs_diff_eq!(all.power_transmission(&probe).unwrap(), 1.0);
        let none = DetectorMask::edge(g, 20.0, KeepSide::Above, Orientation::Polar);
        assert_abs_diff_eq!(none.power_transmission(&probe).unwrap(), 0.0);

        // Symmetric pair clips equal fractions of mirrored beams, exactly.
        let ep = DetectorMask::edge(g, 7.5, KeepSide::Below, Orientation::Polar);
        let ec = DetectorMask::edge(g, -7.5, KeepSide::Above, Orientation::Polar);
        let tp = ep.power_transmission(&probe).unwrap();
        let tc = ec.power_transmission(&conj).unwrap();
        assert_abs_diff_eq!(tp, tc, epsilon = 1e-15);
        assert!(tp < 1.0 && tp > 0.5);
    }

    #[test]
    fn attenuator_scaling() {
        let g = grid();
        let f = ModeField::gaussian(g, (3.0, 2.0), 1.0).unwrap();
        let id = DetectorMask::attenuator(g, 1.0).unwrap();
        assert!(id.amplitude().iter().all(|&t| t == 1.0));
        let block = DetectorMask::attenuator(g, 0.0).unwrap();
        assert_abs_diff_eq!(block.power_transmission(&f).unwrap(), 0.0);
        let half = DetectorMask::attenuator(g, 0.5).unwrap();
        assert_abs_diff_eq!(half.power_transmission(&f).unwrap(), 0.5, epsilon = 1e-12);
        assert!(DetectorMask::attenuator(g, 1.5).is_err());
    }

    #[test]
    fn compose_and_idempotence() {
        let g = grid();
        let f = ModeField::gaussian(g, (0.0, 0.0), 2.0).unwrap();
        let iris = DetectorMask::iris(g, (0.0, 0.0), 2.0).unwrap();
        let att = DetectorMask::attenuator(g, 0.3).unwrap();
        let both = iris.compose(&att).unwrap();
        let t_both = both.power_transmission(&f).unwrap();
        let t_iris = iris.power_transmission(&f).unwrap();
        let t_att = att.power_transmission(&f).unwrap();
        assert!(t_both <= t_iris.min(t_att) + 1e-15);
        assert_abs_diff_eq!(t_both, 0.3 * t_iris, epsilon = 1e-12);

        // Binary masks are idempotent under self-composition.
        let twice = iris.compose(&iris).unwrap();
        for (a, b) in twice.amplitude().iter().zip(iris.amplitude().iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mirror_symmetry_of_transmission() {
        let g = grid();
        let f = ModeField::gaussian(g, (6.5, 1.0), 0.9).unwrap();
        let m = DetectorMask::iris(g, (6.0, 0.5), 1.3).unwrap();
        let t1 = m.power_transmission(&f).unwrap();
        let t2 = m
            .mirrored(MirrorAxis::X)
            .power_transmission(&f.mirrored(MirrorAxis::X))
            .unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn shape_serializes_for_logs() {
        let g = grid();
        let m = DetectorMask::slit(g, (7.0, 0.0), 0.4, Orientation::Azimuthal).unwrap();
        let j = serde_json::to_string(m.shape()).unwrap();
        assert!(j.contains("\"kind\":\"slit\""));
        assert!(j.contains("\"orientation\":\"azimuthal\""));
    }
}
