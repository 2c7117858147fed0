//! Discretized transverse far-field geometry and optical mode functions.
//!
//! Transverse positions are divergence angles in mrad measured from the pump
//! axis; a grid pixel therefore represents a far-field direction, not a
//! near-field position. Fields carry one complex amplitude per pixel and are
//! normalized with respect to the pixel-area measure, so `Σ |f|² ΔA = 1` for
//! a normalized mode.
//!
//! Grids have an even symmetry built in: pixel centers sit at
//! `-H + (i + 1/2) p` so that for every pixel at `q` there is one at `-q`
//! and no pixel sits exactly on the axis. Mirror reflections are then exact
//! pixel permutations.

use std::io::Write;

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dimensionality of the transverse discretization: a 1D cut or a full plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridDim {
    One,
    Two,
}

/// Reflection axes through the pump origin.
///
/// `X` maps (θx, θy) → (θx, −θy); `Y` maps (θx, θy) → (−θx, θy). On a 1D cut
/// the single coordinate plays the role of θx, so `Y` flips it and `X` is the
/// identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MirrorAxis {
    X,
    Y,
}

/// Symmetric pixelation of the far-field plane (or of a 1D cut through it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransverseGrid {
    half_extent: f64,
    n_side: usize,
    dim: GridDim,
}

impl TransverseGrid {
    /// A grid spanning ±`half_extent` mrad with `n_side` pixels per axis.
    pub fn new(half_extent: f64, n_side: usize, dim: GridDim) -> Result<Self> {
        if !half_extent.is_finite() || half_extent <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid half extent must be positive, got {half_extent}"
            )));
        }
        if n_side < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 pixels per side, got {n_side}"
            )));
        }
        Ok(Self { half_extent, n_side, dim })
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn dim(&self) -> GridDim {
        self.dim
    }

    /// Center-to-center pixel spacing in mrad.
    pub fn pitch(&self) -> f64 {
        2.0 * self.half_extent / self.n_side as f64
    }

    /// Integration measure per pixel: pitch in 1D, pitch² in 2D.
    pub fn pixel_area(&self) -> f64 {
        match self.dim {
            GridDim::One => self.pitch(),
            GridDim::Two => self.pitch() * self.pitch(),
        }
    }

    pub fn n_pixels(&self) -> usize {
        match self.dim {
            GridDim::One => self.n_side,
            GridDim::Two => self.n_side * self.n_side,
        }
    }

    /// Coordinate of the i-th pixel center along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_extent + (i as f64 + 0.5) * self.pitch()
    }

    /// (θx, θy) of a flat pixel index. Flat order is row-major over (θy, θx);
    /// a 1D cut has θy = 0.
    pub fn coords(&self, flat: usize) -> (f64, f64) {
        match self.dim {
            GridDim::One => (self.axis_coord(flat), 0.0),
            GridDim::Two => {
                let iy = flat / self.n_side;
                let ix = flat % self.n_side;
                (self.axis_coord(ix), self.axis_coord(iy))
            }
        }
    }

    /// Flat index of the pixel reflected about the given axis. Exact because
    /// pixel centers come in ±q pairs.
    pub fn mirror_index(&self, flat: usize, axis: MirrorAxis) -> usize {
        let n = self.n_side;
        match self.dim {
            GridDim::One => match axis {
                MirrorAxis::X => flat,
                MirrorAxis::Y => n - 1 - flat,
            },
            GridDim::Two => {
                let iy = flat / n;
                let ix = flat % n;
                match axis {
                    MirrorAxis::X => (n - 1 - iy) * n + ix,
                    MirrorAxis::Y => iy * n + (n - 1 - ix),
                }
            }
        }
    }

    /// Flat index of the pixel at −q (point reflection through the origin).
    pub fn point_reflect_index(&self, flat: usize) -> usize {
        match self.dim {
            GridDim::One => self.n_side - 1 - flat,
            GridDim::Two => {
                self.mirror_index(self.mirror_index(flat, MirrorAxis::X), MirrorAxis::Y)
            }
        }
    }
}

/// A complex field sampled on a [`TransverseGrid`].
#[derive(Clone, Debug)]
pub struct ModeField {
    grid: TransverseGrid,
    values: Array1<Complex64>,
}

impl ModeField {
    /// Build an (unnormalized) field by evaluating `f(θx, θy)` at pixel centers.
    pub fn from_fn(grid: TransverseGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = Array1::from_shape_fn(grid.n_pixels(), |i| {
            let (x, y) = grid.coords(i);
            f(x, y)
        });
        Self { grid, values }
    }

    pub fn from_values(grid: TransverseGrid, values: Array1<Complex64>) -> Result<Self> {
        if values.len() != grid.n_pixels() {
            return Err(Error::InvalidArgument(format!(
                "field length {} does not match grid with {} pixels",
                values.len(),
                grid.n_pixels()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array1<Complex64> {
        &self.values
    }

    /// ‖f‖² = Σ |f(q)|² ΔA.
    pub fn norm_sq(&self) -> f64 {
        let da = self.grid.pixel_area();
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * da
    }

    /// Rescale to ‖f‖² = 1. Errors on a (numerically) zero field.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n.is_finite() && n > 1e-300) {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite field".into(),
            ));
        }
        let scale = 1.0 / n.sqrt();
        self.values.mapv_inplace(|z| z * scale);
        Ok(self)
    }

    /// Coefficient vector in the discrete (ℓ²) normalization used by the
    /// Gaussian-state machinery: `f(q)·√ΔA`, so a normalized mode has a unit
    /// Euclidean norm.
    pub fn l2_coefficients(&self) -> Array1<Complex64> {
        let s = self.grid.pixel_area().sqrt();
        self.values.mapv(|z| z * s)
    }

    /// Normalized Gaussian mode `∝ exp(−|q−c|²/w²)`; `waist` is the 1/e²
    /// intensity radius.
    pub fn gaussian(grid: TransverseGrid, center: (f64, f64), waist: f64) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::InvalidArgument(format!("waist must be positive, got {waist}")));
        }
        let w2 = waist * waist;
        Self::from_fn(grid, |x, y| {
            let dx = x - center.0;
            let dy = y - center.1;
            Complex64::new((-(dx * dx + dy * dy) / w2).exp(), 0.0)
        })
        .normalized()
    }

    /// Normalized Laguerre-Gauss mode (radial order 0) of azimuthal index
    /// `ell`: `∝ r^|ℓ| exp(−r²/w²) exp(iℓφ)` about `center`. `ell = 0` reduces
    /// to [`ModeField::gaussian`].
    pub fn lg(grid: TransverseGrid, center: (f64, f64), waist: f64, ell: i32) -> Result<Self> {
        if !(waist.is_finite() && waist > 0.0) {
            return Err(Error::InvalidArgument(format!("waist must be positive, got {waist}")));
        }
        let w2 = waist * waist;
        let k = ell.unsigned_abs() as i32;
        Self::from_fn(grid, |x, y| {
            let dx = x - center.0;
            let dy = y - center.1;
            let r2 = dx * dx + dy * dy;
            let radial = r2.sqrt().powi(k) * (-r2 / w2).exp();
            let phase = ell as f64 * dy.atan2(dx);
            Complex64::from_polar(radial, phase)
        })
        .normalized()
    }

    /// Pixel-wise weighted sum of fields on a common grid, renormalized.
    pub fn superpose(terms: &[(&ModeField, Complex64)]) -> Result<Self> {
        let (first, _) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("superpose of no fields".into()))?;
        let grid = first.grid;
        let mut values = Array1::<Complex64>::zeros(grid.n_pixels());
        for (f, w) in terms {
            if f.grid != grid {
                return Err(Error::InvalidArgument("superpose: fields on different grids".into()));
            }
            values.zip_mut_with(&f.values, |acc, z| *acc += w * z);
        }
        Self { grid, values }.normalized()
    }

    /// ⟨f, g⟩ = Σ f*(q) g(q) ΔA. Conjugate-symmetric.
    pub fn inner_product(&self, other: &ModeField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("inner product across different grids".into()));
        }
        let da = self.grid.pixel_area();
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc * da)
    }

    /// Field reflected about the given axis through the pump origin.
    pub fn mirrored(&self, axis: MirrorAxis) -> Self {
        let values = Array1::from_shape_fn(self.values.len(), |i| {
            self.values[self.grid.mirror_index(i, axis)]
        });
        Self { grid: self.grid, values }
    }

    /// Intensity map |f(q)|².
    pub fn intensity(&self) -> Array1<f64> {
        self.values.mapv(|z| z.norm_sqr())
    }

    /// Writes `theta_x_mrad,theta_y_mrad,re,im` rows, row-major over pixels.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "theta_x_mrad,theta_y_mrad,re,im")?;
        for (i, z) in self.values.iter().enumerate() {
            let (x, y) = self.grid.coords(i);
            writeln!(out, "{},{},{},{}", x, y, z.re, z.im)?;
        }
        Ok(())
    }
}

/// Intensity pattern of two interfered fields plus its azimuthal fringe count.
#[derive(Clone, Debug)]
pub struct Interferogram {
    pub grid: TransverseGrid,
    /// |f + g|² per pixel.
    pub intensity: Array1<f64>,
    /// Number of azimuthal lobes on the brightest ring around the centroid;
    /// 0 when the ring has no azimuthal structure.
    pub fringe_count: usize,
}

/// Interfere two fields and count azimuthal fringes.
///
/// The count is taken on the circle through the brightest pixel, centered on
/// the intensity centroid: the circle is sampled bilinearly, thresholded at
/// 50% of its own maximum, and the connected above-threshold arcs are
/// counted (wrapping around). A circle that never drops below threshold has
/// no azimuthal structure and counts as 0.
pub fn interferogram(f: &ModeField, g: &ModeField) -> Result<Interferogram> {
    if f.grid != g.grid {
        return Err(Error::InvalidArgument("interferogram across different grids".into()));
    }
    let grid = f.grid;
    if grid.dim() != GridDim::Two {
        return Err(Error::InvalidArgument("fringe counting needs a 2D grid".into()));
    }
    let intensity = Array1::from_shape_fn(grid.n_pixels(), |i| {
        (f.values[i] + g.values[i]).norm_sqr()
    });
    let total: f64 = intensity.sum();
    if !(total.is_finite() && total > 1e-300) {
        return Err(Error::Undefined("fringe count of a dark interferogram".into()));
    }

    // Intensity centroid and brightest pixel.
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut max_i = 0;
    for (i, &v) in intensity.iter().enumerate() {
        let (x, y) = grid.coords(i);
        cx += v * x;
        cy += v * y;
        if v > intensity[max_i] {
            max_i = i;
        }
    }
    cx /= total;
    cy /= total;
    let (mx, my) = grid.coords(max_i);
    let ring_r = ((mx - cx).powi(2) + (my - cy).powi(2)).sqrt();

    // Sample the ring and count above-threshold arcs.
    const SAMPLES: usize = 720;
    let mut ring = [0.0f64; SAMPLES];
    let mut ring_max = 0.0f64;
    for (k, r) in ring.iter_mut().enumerate() {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64;
        *r = sample_bilinear(&grid, &intensity, cx + ring_r * phi.cos(), cy + ring_r * phi.sin());
        ring_max = ring_max.max(*r);
    }
    let fringe_count = if ring_max <= 0.0 {
        0
    } else {
        let thr = 0.5 * ring_max;
        let above: Vec<bool> = ring.iter().map(|&v| v >= thr).collect();
        if above.iter().all(|&b| b) {
            0
        } else {
            (0..SAMPLES)
                .filter(|&k| above[k] && !above[(k + SAMPLES - 1) % SAMPLES])
                .count()
        }
    };

    Ok(Interferogram { grid, intensity, fringe_count })
}

/// Bilinear interpolation of a pixel map at an arbitrary point; clamps to the
/// grid edge.
fn sample_bilinear(grid: &TransverseGrid, map: &Array1<f64>, x: f64, y: f64) -> f64 {
    let n = grid.n_side();
    let p = grid.pitch();
    let fx = ((x + grid.half_extent()) / p - 0.5).clamp(0.0, (n - 1) as f64);
    let fy = ((y + grid.half_extent()) / p - 0.5).clamp(0.0, (n - 1) as f64);
    let ix = (fx.floor() as usize).min(n - 2);
    let iy = (fy.floor() as usize).min(n - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let at = |ix: usize, iy: usize| map[iy * n + ix];
    (1.0 - tx) * (1.0 - ty) * at(ix, iy)
        + tx * (1.0 - ty) * at(ix + 1, iy)
        + (1.0 - tx) * ty * at(ix, iy + 1)
        + tx * ty * at(ix + 1, iy + 1)
}
