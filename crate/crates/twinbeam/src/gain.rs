//! Probe–conjugate pair-creation kernel, its Schmidt decomposition into
//! independently squeezed mode pairs, and the resulting multimode amplifier
//! transformation.
//!
//! The kernel is phenomenological: transverse momentum conservation is a
//! Gaussian of the pump's far-field width, the longitudinal quasi-phase
//! matching is a clamped sinc that peaks at the gain angle θ₀, and a Gaussian
//! envelope models the falling probe–pump overlap at large angles:
//!
//! ```text
//! κ(q_p, q_c) = s₀ · exp(−|q_p+q_c|²/w_p²) · PM(θ̄) · OV(θ̄)
//! θ̄  = (|q_p| + |q_c|)/2
//! PM(θ) = max(sinc(π L (θ² − θ₀²) / 2λ), 0)
//! OV(θ) = exp(−(θ − θ₀)²/w_o²)
//! ```
//!
//! Singular-value decomposing κ yields paired mode families (u_i, v_i) with
//! squeeze parameters s_i; each pair is an independent two-mode squeezer with
//! gain cosh²s_i.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Op};
use crate::transverse::{GridDim, ModeField, TransverseGrid};

/// Physical knobs of the amplifier model. Angles and angular widths in mrad,
/// lengths in meters, `s0` dimensionless.
#[derive(Clone, Copy, Debug)]
pub struct GainConfig {
    /// Peak squeeze strength; usually calibrated to hit a target gain.
    pub s0: f64,
    /// Polar angle of maximum gain (mrad).
    pub theta0: f64,
    /// Optical wavelength (m).
    pub lambda: f64,
    /// Gain-medium length (m).
    pub cell_length: f64,
    /// 1/e² intensity radius of the pump in the far field (mrad).
    pub pump_far_width: f64,
    /// Width of the probe–pump overlap envelope (mrad).
    pub overlap_width: f64,
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("s0 must be ≥ 0, got {}", self.s0)));
        }
        if !(self.theta0.is_finite() && self.theta0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("theta0 must be ≥ 0, got {}", self.theta0)));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("cell_length", self.cell_length),
            ("pump_far_width", self.pump_far_width),
            ("overlap_width", self.overlap_width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Largest phase-mismatch angle (radians) for which the dephasing length
/// still reaches the cell length: √(λ/L).
pub fn phase_mismatch_angle(lambda: f64, cell_length: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(cell_length.is_finite() && cell_length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cell length must be positive, got {cell_length}"
        )));
    }
    Ok((lambda / cell_length).sqrt())
}

/// How a 1D grid samples the far-field plane.
///
/// `PolarCut` runs along the meridian through the pump axis (coordinate =
/// signed polar angle; the probe sits near +θ₀ and the conjugate near −θ₀).
/// `AzimuthalCut` runs along the gain ring at radius θ₀ (coordinate = arc
/// length), with each beam parameterized around its own spot center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelGeometry {
    Plane,
    PolarCut,
    AzimuthalCut,
}

/// Pair-creation amplitude between every probe pixel and every conjugate
/// pixel. Real and non-negative: the pump phase is flat and every reproduced
/// measurement is intensity-only.
#[derive(Clone, Debug)]
pub struct CouplingKernel {
    grid: TransverseGrid,
    geometry: KernelGeometry,
    matrix: Array2<f64>,
}

impl CouplingKernel {
    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn geometry(&self) -> KernelGeometry {
        self.geometry
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

fn pm_factor(theta_mrad: f64, cfg: &GainConfig) -> f64 {
    let th = theta_mrad * 1e-3;
    let th0 = cfg.theta0 * 1e-3;
    let arg = std::f64::consts::PI * cfg.cell_length * (th * th - th0 * th0) / (2.0 * cfg.lambda);
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
    sinc.max(0.0)
}

fn ov_factor(theta_mrad: f64, cfg: &GainConfig) -> f64 {
    let d = theta_mrad - cfg.theta0;
    (-d * d / (cfg.overlap_width * cfg.overlap_width)).exp()
}

/// Build the coupling kernel on a grid. 2D grids use the planar geometry;
/// for 1D cuts pass the sampling explicitly via [`build_kernel_on`].
pub fn build_kernel(grid: TransverseGrid, cfg: &GainConfig) -> Result<CouplingKernel> {
    let geometry = match grid.dim() {
        GridDim::Two => KernelGeometry::Plane,
        GridDim::One => KernelGeometry::PolarCut,
    };
    build_kernel_on(grid, cfg, geometry)
}

pub fn build_kernel_on(
    grid: TransverseGrid,
    cfg: &GainConfig,
    geometry: KernelGeometry,
) -> Result<CouplingKernel> {
    cfg.validate()?;
    match (grid.dim(), geometry) {
        (GridDim::Two, KernelGeometry::Plane) | (GridDim::One, KernelGeometry::PolarCut)
        | (GridDim::One, KernelGeometry::AzimuthalCut) => {}
        _ => {
            return Err(Error::InvalidArgument(
                "kernel geometry incompatible with grid dimensionality".into(),
            ))
        }
    }
    let n = grid.n_pixels();
    let wp2 = cfg.pump_far_width * cfg.pump_far_width;
    let matrix = match geometry {
        KernelGeometry::Plane | KernelGeometry::PolarCut => {
            // Cache pixel coordinates and radii.
            let coords: Vec<(f64, f64)> = (0..n).map(|i| grid.coords(i)).collect();
            let radii: Vec<f64> = coords.iter().map(|(x, y)| (x * x + y * y).sqrt()).collect();
            Array2::from_shape_fn((n, n), |(p, c)| {
                let dx = coords[p].0 + coords[c].0;
                let dy = coords[p].1 + coords[c].1;
                let momentum = (-(dx * dx + dy * dy) / wp2).exp();
                if momentum < 1e-300 {
                    return 0.0;
                }
                let theta_bar = 0.5 * (radii[p] + radii[c]);
                cfg.s0 * momentum * pm_factor(theta_bar, cfg) * ov_factor(theta_bar, cfg)
            })
        }
        KernelGeometry::AzimuthalCut => {
            // Both beams live on the gain ring at radius θ₀; the coordinate is
            // arc length around each beam's own spot center, and momentum
            // conservation couples equal arc positions through the chord
            // |q_p + q_c|² = 2θ₀²(1 − cos Δφ).
            let th0 = cfg.theta0;
            if th0 <= 0.0 {
                return Err(Error::InvalidArgument(
                    "azimuthal cut needs a positive gain angle theta0".into(),
                ));
            }
            let gain_at_ring = cfg.s0 * pm_factor(th0, cfg) * ov_factor(th0, cfg);
            Array2::from_shape_fn((n, n), |(p, c)| {
                let du = (grid.axis_coord(p) - grid.axis_coord(c)) / th0;
                let chord2 = 2.0 * th0 * th0 * (1.0 - du.cos());
                gain_at_ring * (-chord2 / wp2).exp()
            })
        }
    };
    Ok(CouplingKernel { grid, geometry, matrix })
}

/// Paired squeezed-mode families diagonalizing a coupling kernel.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    grid: TransverseGrid,
    /// Squeeze parameters, descending.
    s: Array1<f64>,
    /// ℓ²-orthonormal probe mode columns (n_pixels × rank).
    u: Array2<f64>,
    /// ℓ²-orthonormal conjugate mode columns.
    v: Array2<f64>,
}

/// Singular-value decompose the kernel into squeezed pairs.
///
/// Mode functions are normalized against the pixel-area measure, so the
/// squeeze parameters pick up one factor of the pixel area relative to the
/// raw singular values; this keeps them stable under grid refinement. The
/// expansion is truncated where s_i < 10⁻⁶ s_max (extended if needed so the
/// discarded tail stays below 10⁻⁷ of the spectrum energy); truncated modes
/// pass through the amplifier untouched.
pub fn schmidt_decompose(kernel: &CouplingKernel) -> Result<SchmidtDecomposition> {
    if kernel.matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("kernel has non-finite entries".into()));
    }
    let (u_full, sigma, vt_full) = linalg::svd_thin(&kernel.matrix)?;
    let da = kernel.grid.pixel_area();

    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = if smax <= 0.0 {
        0
    } else {
        let by_value = sigma.iter().take_while(|&&x| x >= 1e-6 * smax).count();
        let total_energy: f64 = sigma.iter().map(|x| x * x).sum();
        let mut tail = 0.0;
        let mut by_energy = sigma.len();
        for i in (0..sigma.len()).rev() {
            tail += sigma[i] * sigma[i];
            if tail > 1e-14 * total_energy {
                by_energy = i + 1;
                break;
            }
            by_energy = i;
        }
        by_value.max(by_energy).max(1)
    };

    let s = sigma.slice(s![..rank]).mapv(|x| x * da);
    let u = u_full.slice(s![.., ..rank]).to_owned();
    let v = vt_full.slice(s![..rank, ..]).t().to_owned();
    Ok(SchmidtDecomposition { grid: kernel.grid, s, u, v })
}

impl SchmidtDecomposition {
    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Squeeze parameters s_i, descending.
    pub fn squeeze_parameters(&self) -> &Array1<f64> {
        &self.s
    }

    /// i-th probe Schmidt mode as a field on the grid.
    pub fn probe_mode(&self, i: usize) -> ModeField {
        self.mode_from_column(&self.u, i)
    }

    /// i-th conjugate Schmidt mode.
    pub fn conjugate_mode(&self, i: usize) -> ModeField {
        self.mode_from_column(&self.v, i)
    }

    fn mode_from_column(&self, cols: &Array2<f64>, i: usize) -> ModeField {
        let scale = 1.0 / self.grid.pixel_area().sqrt();
        let values = cols.column(i).mapv(|x| Complex64::new(x * scale, 0.0));
        ModeField::from_values(self.grid, values).expect("column length matches grid")
    }

    /// Projections |⟨u_i, seed⟩|² of a normalized seed on the probe modes.
    pub fn probe_projections(&self, seed: &ModeField) -> Result<Array1<f64>> {
        if seed.grid() != &self.grid {
            return Err(Error::InvalidArgument("seed grid does not match kernel grid".into()));
        }
        let l2 = seed.l2_coefficients();
        Ok(Array1::from_shape_fn(self.rank(), |i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (uj, zj) in self.u.column(i).iter().zip(l2.iter()) {
                acc += uj * zj;
            }
            acc.norm_sqr()
        }))
    }

    /// Rebuild the kernel matrix from the retained pairs (for verification).
    pub fn reconstruct_kernel(&self) -> Array2<f64> {
        let da = self.grid.pixel_area();
        let sigma = self.s.mapv(|x| x / da);
        let mut us = self.u.to_owned();
        for (mut col, &sv) in us.columns_mut().into_iter().zip(sigma.iter()) {
            col *= sv;
        }
        linalg::dgemm(Op::None, &us, Op::Transpose, &self.v)
    }

    /// Spectrum rows `(index, s_i)` for CSV export.
    pub fn spectrum(&self) -> Vec<(usize, f64)> {
        self.s.iter().copied().enumerate().collect()
    }
}

/// Photon-flux gain of a bright coherent seed in the given normalized mode:
/// Σ cosh²(s_i)|⟨u_i,seed⟩|² plus straight passthrough of the unmatched rest.
pub fn effective_gain(schmidt: &SchmidtDecomposition, seed: &ModeField) -> Result<f64> {
    if (seed.norm_sq() - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument("effective gain needs a normalized seed".into()));
    }
    let p = schmidt.probe_projections(seed)?;
    let mut g = 0.0;
    let mut covered = 0.0;
    for (pi, si) in p.iter().zip(schmidt.s.iter()) {
        g += si.cosh().powi(2) * pi;
        covered += pi;
    }
    Ok(g + (1.0 - covered.min(1.0)))
}

/// Coherence-area counting estimate of the number of independently squeezed
/// pair modes: Δθ/θc radial cells × πθ₀/θc azimuthal cells.
#[derive(Clone, Copy, Debug)]
pub struct ModeCountEstimate {
    pub radial: f64,
    pub azimuthal: f64,
    pub total: f64,
}

pub fn mode_count_estimate(theta0: f64, delta_theta: f64, theta_c: f64) -> Result<ModeCountEstimate> {
    for (name, v) in [("theta0", theta0), ("delta_theta", delta_theta), ("theta_c", theta_c)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let radial = delta_theta / theta_c;
    let azimuthal = std::f64::consts::PI * theta0 / theta_c;
    Ok(ModeCountEstimate { radial, azimuthal, total: radial * azimuthal })
}

/// The amplifier as a linear map on mode operators:
/// `a_out = U_aa a + V_ab b†`, `b_out = U_bb b + V_ba a†`, stored in the
/// factored Schmidt form (cosh on the diagonal pairs, sinh on the cross
/// terms, identity on the orthogonal complement).
#[derive(Clone, Debug)]
pub struct BogoliubovTransform {
    m: usize,
    s: Array1<f64>,
    sinh: Array1<f64>,
    cosh: Array1<f64>,
    u: Array2<f64>,
    v: Array2<f64>,
}

/// Amplifier transformation generated by every Schmidt pair.
pub fn bogoliubov_from_schmidt(schmidt: &SchmidtDecomposition) -> BogoliubovTransform {
    BogoliubovTransform {
        m: schmidt.grid.n_pixels(),
        s: schmidt.s.clone(),
        sinh: schmidt.s.mapv(f64::sinh),
        cosh: schmidt.s.mapv(f64::cosh),
        u: schmidt.u.clone(),
        v: schmidt.v.clone(),
    }
}

impl BogoliubovTransform {
    /// Identity on M modes per beam.
    pub fn identity(m: usize) -> Self {
        Self {
            m,
            s: Array1::zeros(0),
            sinh: Array1::zeros(0),
            cosh: Array1::zeros(0),
            u: Array2::zeros((m, 0)),
            v: Array2::zeros((m, 0)),
        }
    }

    /// Build from explicit (s, probe mode, conjugate mode) pairs with unit ℓ²
    /// columns. The mode families must be orthonormal; that is not re-checked
    /// here beyond the norms.
    pub fn from_pairs(m: usize, pairs: &[(f64, Array1<f64>, Array1<f64>)]) -> Result<Self> {
        let r = pairs.len();
        let mut s = Array1::zeros(r);
        let mut u = Array2::zeros((m, r));
        let mut v = Array2::zeros((m, r));
        for (i, (si, ui, vi)) in pairs.iter().enumerate() {
            if *si < 0.0 || !si.is_finite() {
                return Err(Error::InvalidArgument(format!("squeeze parameter must be ≥ 0, got {si}")));
            }
            if ui.len() != m || vi.len() != m {
                return Err(Error::InvalidArgument("mode vector length mismatch".into()));
            }
            for (x, name) in [(ui, "probe"), (vi, "conjugate")] {
                let norm: f64 = x.iter().map(|a| a * a).sum();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidArgument(format!("{name} mode {i} is not unit norm")));
                }
            }
            s[i] = *si;
            u.column_mut(i).assign(ui);
            v.column_mut(i).assign(vi);
        }
        Ok(Self {
            m,
            sinh: s.mapv(f64::sinh),
            cosh: s.mapv(f64::cosh),
            s,
            u,
            v,
        })
    }

    pub fn modes_per_beam(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn squeeze_parameters(&self) -> &Array1<f64> {
        &self.s
    }

    /// (probe columns, conjugate columns, sinh, cosh) of the factored form.
    pub fn factors(&self) -> (&Array2<f64>, &Array2<f64>, Array1<f64>, Array1<f64>) {
        (&self.u, &self.v, self.sinh.clone(), self.cosh.clone())
    }

    /// Mean-field map: α'_p = α_p + U[(cosh−1)(Uᵀα_p) + sinh(Vᵀᾱ_c)] and the
    /// mirror image on the conjugate.
    pub fn transform_mean(&self, alpha: &Array1<Complex64>) -> Array1<Complex64> {
        assert_eq!(alpha.len(), 2 * self.m, "mean vector length");
        let m = self.m;
        let r = self.rank();
        let mut out = alpha.clone();
        if r == 0 {
            return out;
        }
        let pa = alpha.slice(s![..m]);
        let pc = alpha.slice(s![m..]);

        // Projections: Uᵀ α_p, Vᵀ α_c, Uᵀ ᾱ_p, Vᵀ ᾱ_c.
        let mut proj_u = vec![Complex64::new(0.0, 0.0); r];
        let mut proj_v = vec![Complex64::new(0.0, 0.0); r];
        let mut proj_u_conj = vec![Complex64::new(0.0, 0.0); r];
        let mut proj_v_conj = vec![Complex64::new(0.0, 0.0); r];
        for i in 0..r {
            let (mut au, mut av, mut auc, mut avc) = (
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            );
            for j in 0..m {
                au += self.u[[j, i]] * pa[j];
                av += self.v[[j, i]] * pc[j];
                auc += self.u[[j, i]] * pa[j].conj();
                avc += self.v[[j, i]] * pc[j].conj();
            }
            proj_u[i] = au;
            proj_v[i] = av;
            proj_u_conj[i] = auc;
            proj_v_conj[i] = avc;
        }
        for j in 0..m {
            let mut dp = Complex64::new(0.0, 0.0);
            let mut dc = Complex64::new(0.0, 0.0);
            for i in 0..r {
                dp += self.u[[j, i]] * ((self.cosh[i] - 1.0) * proj_u[i] + self.sinh[i] * proj_v_conj[i]);
                dc += self.v[[j, i]] * ((self.cosh[i] - 1.0) * proj_v[i] + self.sinh[i] * proj_u_conj[i]);
            }
            out[j] += dp;
            out[m + j] += dc;
        }
        out
    }

    /// Materialized block U_aa = I + U diag(cosh−1) Uᵀ.
    pub fn block_u_aa(&self) -> Array2<f64> {
        self.block_diag_like(&self.u, &self.cosh.mapv(|c| c - 1.0), true)
    }

    /// Materialized block U_bb = I + V diag(cosh−1) Vᵀ.
    pub fn block_u_bb(&self) -> Array2<f64> {
        self.block_diag_like(&self.v, &self.cosh.mapv(|c| c - 1.0), true)
    }

    /// Materialized block V_ab = U diag(sinh) Vᵀ.
    pub fn block_v_ab(&self) -> Array2<f64> {
        let mut w = self.u.to_owned();
        for (mut col, &f) in w.columns_mut().into_iter().zip(self.sinh.iter()) {
            col *= f;
        }
        linalg::dgemm(Op::None, &w, Op::Transpose, &self.v)
    }

    /// Materialized block V_ba = V diag(sinh) Uᵀ.
    pub fn block_v_ba(&self) -> Array2<f64> {
        let mut w = self.v.to_owned();
        for (mut col, &f) in w.columns_mut().into_iter().zip(self.sinh.iter()) {
            col *= f;
        }
        linalg::dgemm(Op::None, &w, Op::Transpose, &self.u)
    }

    fn block_diag_like(&self, cols: &Array2<f64>, d: &Array1<f64>, add_identity: bool) -> Array2<f64> {
        let mut w = cols.to_owned();
        for (mut col, &f) in w.columns_mut().into_iter().zip(d.iter()) {
            col *= f;
        }
        let mut out = linalg::dgemm(Op::None, &w, Op::Transpose, cols);
        if add_identity {
            for j in 0..self.m {
                out[[j, j]] += 1.0;
            }
        }
        out
    }

    /// Combined 2M×2M operator blocks for the dense (general) moment update.
    pub fn combined_u(&self) -> Array2<f64> {
        let m = self.m;
        let mut out = Array2::zeros((2 * m, 2 * m));
        out.slice_mut(s![..m, ..m]).assign(&self.block_u_aa());
        out.slice_mut(s![m.., m..]).assign(&self.block_u_bb());
        out
    }

    pub fn combined_v(&self) -> Array2<f64> {
        let m = self.m;
        let mut out = Array2::zeros((2 * m, 2 * m));
        out.slice_mut(s![..m, m..]).assign(&self.block_v_ab());
        out.slice_mut(s![m.., ..m]).assign(&self.block_v_ba());
        out
    }

    /// Worst violation of the symplectic conditions
    /// `U_aa U_aaᵀ − V_ab V_abᵀ = 1` and `U_aa V_baᵀ = V_ab U_bbᵀ`
    /// (plus their conjugate-beam counterparts). Materializes the blocks;
    /// meant for verification at small mode counts.
    pub fn symplectic_defect(&self) -> f64 {
        let u_aa = self.block_u_aa();
        let u_bb = self.block_u_bb();
        let v_ab = self.block_v_ab();
        let v_ba = self.block_v_ba();

        let mut defect = 0.0f64;
        let uu = linalg::dgemm(Op::None, &u_aa, Op::Transpose, &u_aa);
        let vv = linalg::dgemm(Op::None, &v_ab, Op::Transpose, &v_ab);
        for j in 0..self.m {
            for k in 0..self.m {
                let id = if j == k { 1.0 } else { 0.0 };
                defect = defect.max((uu[[j, k]] - vv[[j, k]] - id).abs());
            }
        }
        let uub = linalg::dgemm(Op::None, &u_bb, Op::Transpose, &u_bb);
        let vvb = linalg::dgemm(Op::None, &v_ba, Op::Transpose, &v_ba);
        for j in 0..self.m {
            for k in 0..self.m {
                let id = if j == k { 1.0 } else { 0.0 };
                defect = defect.max((uub[[j, k]] - vvb[[j, k]] - id).abs());
            }
        }
        let cross1 = linalg::dgemm(Op::None, &u_aa, Op::Transpose, &v_ba);
        let cross2 = linalg::dgemm(Op::None, &v_ab, Op::Transpose, &u_bb);
        for (x, y) in cross1.iter().zip(cross2.iter()) {
            defect = defect.max((x - y).abs());
        }
        defect
    }
}

/// Solve for the `s0` that makes a Gaussian seed at the gain angle reach the
/// target photon gain. Exploits that every s_i scales linearly with s0 while
/// the Schmidt modes stay fixed.
pub fn calibrate_s0(
    grid: TransverseGrid,
    cfg: &GainConfig,
    geometry: KernelGeometry,
    seed: &ModeField,
    target_gain: f64,
) -> Result<f64> {
    if !(target_gain.is_finite() && target_gain >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target gain must be ≥ 1, got {target_gain}"
        )));
    }
    let mut unit_cfg = *cfg;
    unit_cfg.s0 = 1.0;
    let kernel = build_kernel_on(grid, &unit_cfg, geometry)?;
    let schmidt = schmidt_decompose(&kernel)?;
    let p = schmidt.probe_projections(seed)?;
    let covered: f64 = p.sum();
    if covered < 1e-12 && target_gain > 1.0 {
        return Err(Error::Numerical(
            "seed does not overlap any gain mode; target gain unreachable".into(),
        ));
    }
    let gain_at = |c: f64| -> f64 {
        let mut g = 1.0 - covered.min(1.0);
        for (pi, si) in p.iter().zip(schmidt.squeeze_parameters().iter()) {
            g += (c * si).cosh().powi(2) * pi;
        }
        g
    };
    let mut hi = 1.0f64;
    while gain_at(hi) < target_gain {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical("calibration did not bracket the target gain".into()));
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gain_at(mid) < target_gain {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn paper_config() -> GainConfig {
        GainConfig {
            s0: 1.0,
            theta0: 7.0,
            lambda: 795e-9,
            cell_length: 12e-3,
            pump_far_width: 0.5,
            overlap_width: 6.0,
        }
    }

    #[test]
    fn phase_mismatch_values() {
        // √(795 nm / 12 mm) = 8.139 mrad.
        let th = phase_mismatch_angle(795e-9, 12e-3).unwrap();
        assert_abs_diff_eq!(th * 1e3, 8.139, epsilon = 5e-3);
        // √(1064 nm / 10 mm) = 10.315 mrad.
        let th = phase_mismatch_angle(1064e-9, 10e-3).unwrap();
        assert_abs_diff_eq!(th * 1e3, 10.315, epsilon = 5e-3);
        // Long-cell limit → 0.
        assert!(phase_mismatch_angle(795e-9, 1e9).unwrap() < 1e-6);
        assert!(phase_mismatch_angle(-1.0, 1.0).is_err());
        assert!(phase_mismatch_angle(1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_peak_and_momentum_width() {
        // Grid with pixel centers exactly at ±7, pump width 2 for the e⁻¹ check.
        let grid = TransverseGrid::new(8.0, 8, GridDim::One).unwrap();
        let mut cfg = paper_config();
        cfg.pump_far_width = 2.0;
        let kernel = build_kernel(grid, &cfg).unwrap();
        let ip = |x: f64| ((x + 8.0) / 2.0 - 0.5).round() as usize;

        // Momentum-conserving entry at the gain angle: both factors unity.
        let peak = kernel.matrix()[[ip(7.0), ip(-7.0)]];
        assert_abs_diff_eq!(peak, cfg.s0, epsilon = 1e-12);

        // |q_p + q_c| = w_p drops the momentum factor to e⁻¹ of the
        // corresponding momentum-conserving entry at the same θ̄.
        let k_off = kernel.matrix()[[ip(7.0), ip(-5.0)]];
        let theta_bar = 6.0;
        let diag_ref = cfg.s0 * pm_factor(theta_bar, &cfg) * ov_factor(theta_bar, &cfg);
        assert_abs_diff_eq!(k_off / diag_ref, (-1.0f64).exp(), epsilon = 1e-12);

        // All entries bounded by s0 and non-negative.
        assert!(kernel.matrix().iter().all(|&x| (0.0..=cfg.s0 + 1e-12).contains(&x)));
    }

    #[test]
    fn phase_matching_falls_off_within_the_bandwidth() {
        let cfg = paper_config();
        // Unity at θ₀, ≤ 0.2 of peak by θ₀ + 8 mrad.
        assert_abs_diff_eq!(pm_factor(cfg.theta0, &cfg), 1.0, epsilon = 1e-12);
        assert!(pm_factor(cfg.theta0 + 8.0, &cfg) <= 0.2);
        // Still substantial a few mrad inside.
        assert!(pm_factor(cfg.theta0 - 4.0, &cfg) > 0.5);
    }

    #[test]
    fn kernel_mirror_symmetry() {
        let grid = TransverseGrid::new(12.0, 32, GridDim::One).unwrap();
        let kernel = build_kernel(grid, &paper_config()).unwrap();
        let n = grid.n_pixels();
        for p in 0..n {
            for c in 0..n {
                let pr = grid.point_reflect_index(p);
                let cr = grid.point_reflect_index(c);
                // Swapping beams through the pump axis leaves the kernel alone.
                assert_abs_diff_eq!(
                    kernel.matrix()[[p, c]],
                    kernel.matrix()[[cr, pr]],
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn rank_one_kernel_recovers_modes() {
        let grid = TransverseGrid::new(6.0, 64, GridDim::One).unwrap();
        let u = ModeField::gaussian(grid, (3.0, 0.0), 0.8).unwrap();
        let v = ModeField::gaussian(grid, (-3.0, 0.0), 0.8).unwrap();
        let s0 = 0.7;
        let n = grid.n_pixels();
        let matrix = Array2::from_shape_fn((n, n), |(p, c)| {
            s0 * u.values()[p].re * v.values()[c].re
        });
        let kernel = CouplingKernel { grid, geometry: KernelGeometry::PolarCut, matrix };
        let schmidt = schmidt_decompose(&kernel).unwrap();
        assert_abs_diff_eq!(schmidt.squeeze_parameters()[0], s0, epsilon = 1e-9);
        if schmidt.rank() > 1 {
            assert!(schmidt.squeeze_parameters()[1] < 1e-9);
        }
        let overlap = schmidt.probe_mode(0).inner_product(&u).unwrap().norm();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-9);
        let overlap_v = schmidt.conjugate_mode(0).inner_product(&v).unwrap().norm();
        assert_abs_diff_eq!(overlap_v, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_kernel_has_rank_zero() {
        let grid = TransverseGrid::new(6.0, 16, GridDim::One).unwrap();
        let mut cfg = paper_config();
        cfg.s0 = 0.0;
        let kernel = build_kernel(grid, &cfg).unwrap();
        let schmidt = schmidt_decompose(&kernel).unwrap();
        assert_eq!(schmidt.rank(), 0);
    }

    #[test]
    fn schmidt_reconstruction_and_orthonormality() {
        let grid = TransverseGrid::new(12.0, 128, GridDim::One).unwrap();
        let kernel = build_kernel(grid, &paper_config()).unwrap();
        let schmidt = schmidt_decompose(&kernel).unwrap();

        let rec = schmidt.reconstruct_kernel();
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for (x, y) in kernel.matrix().iter().zip(rec.iter()) {
            err2 += (x - y).powi(2);
            norm2 += x.powi(2);
        }
        assert!((err2 / norm2).sqrt() < 1e-6, "reconstruction error {:.2e}", (err2 / norm2).sqrt());

        // Orthonormal within 1e-8.
        for i in 0..schmidt.rank().min(8) {
            for j in 0..schmidt.rank().min(8) {
                let ip = schmidt
                    .probe_mode(i)
                    .inner_product(&schmidt.probe_mode(j))
                    .unwrap()
                    .norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expect, epsilon = 1e-8);
            }
        }

        // Descending squeeze parameters.
        for w in schmidt.squeeze_parameters().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn effective_gain_on_schmidt_modes_and_symmetry() {
        let grid = TransverseGrid::new(12.0, 128, GridDim::One).unwrap();
        let mut cfg = paper_config();
        cfg.s0 = 2.0;
        let kernel = build_kernel(grid, &cfg).unwrap();
        let schmidt = schmidt_decompose(&kernel).unwrap();

        // Gain–squeeze relation on the leading pairs.
        for i in 0..3 {
            let g = effective_gain(&schmidt, &schmidt.probe_mode(i)).unwrap();
            let expect = schmidt.squeeze_parameters()[i].cosh().powi(2);
            assert_abs_diff_eq!(g, expect, epsilon = 1e-9 * expect);
        }

        // Mirror symmetry of the gain.
        let seed = ModeField::gaussian(grid, (7.0, 0.0), 0.5).unwrap();
        let mirrored = seed.mirrored(crate::transverse::MirrorAxis::Y);
        let g1 = effective_gain(&schmidt, &seed).unwrap();
        let g2 = effective_gain(&schmidt, &mirrored).unwrap();
        assert_abs_diff_eq!(g1, g2, epsilon = 1e-9 * g1);

        // Orthogonal seed passes through with unit gain.
        let far = ModeField::gaussian(grid, (0.2, 0.0), 0.1).unwrap();
        let g = effective_gain(&schmidt, &far).unwrap();
        assert!(g < 1.2);
    }

    #[test]
    fn s0_scales_schmidt_spectrum_linearly() {
        let grid = TransverseGrid::new(12.0, 64, GridDim::One).unwrap();
        let mut cfg = paper_config();
        cfg.s0 = 1.0;
        let s1 = schmidt_decompose(&build_kernel(grid, &cfg).unwrap()).unwrap();
        cfg.s0 = 2.5;
        let s2 = schmidt_decompose(&build_kernel(grid, &cfg).unwrap()).unwrap();
        for i in 0..s1.rank().min(s2.rank()).min(16) {
            assert_abs_diff_eq!(
                2.5 * s1.squeeze_parameters()[i],
                s2.squeeze_parameters()[i],
                epsilon = 1e-9
            );
            // Monotone: never decreases under larger s0.
            assert!(s2.squeeze_parameters()[i] >= s1.squeeze_parameters()[i]);
        }
    }

    #[test]
    fn bogoliubov_blocks_and_symplectic_invariant() {
        // Identity at zero squeezing.
        let id = BogoliubovTransform::identity(4);
        assert_eq!(id.rank(), 0);
        let u = id.block_u_aa();
        for j in 0..4 {
            for k in 0..4 {
                assert_eq!(u[[j, k]], if j == k { 1.0 } else { 0.0 });
            }
        }

        // Gain 4.5 ↔ s = arccosh(√4.5) ≈ 1.3843.
        let s = (4.5f64).sqrt().acosh();
        assert_abs_diff_eq!(s, 1.3843, epsilon = 1e-4);
        assert_abs_diff_eq!(s.cosh().powi(2), 4.5, epsilon = 1e-12);

        // Symplectic defect on a paper-parameter kernel.
        let grid = TransverseGrid::new(12.0, 64, GridDim::One).unwrap();
        let mut cfg = paper_config();
        cfg.s0 = 2.0;
        let schmidt = schmidt_decompose(&build_kernel(grid, &cfg).unwrap()).unwrap();
        let t = bogoliubov_from_schmidt(&schmidt);
        assert!(t.symplectic_defect() < 1e-8, "defect {:.2e}", t.symplectic_defect());
    }

    #[test]
    fn mode_count_estimates() {
        let e = mode_count_estimate(7.0, 8.0, 1.2).unwrap();
        assert_abs_diff_eq!(e.radial, 6.667, epsilon = 1e-3);
        assert_abs_diff_eq!(e.azimuthal, 18.326, epsilon = 1e-3);
        assert_abs_diff_eq!(e.total, 122.17, epsilon = 0.01);

        let e = mode_count_estimate(7.0, 1.2, 1.2).unwrap();
        assert_abs_diff_eq!(e.radial, 1.0, epsilon = 1e-12);

        let e = mode_count_estimate(10.0, 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.total, 100.0 * std::f64::consts::PI, epsilon = 1e-9);

        assert!(mode_count_estimate(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn calibration_round_trip() {
        let grid = TransverseGrid::new(12.0, 128, GridDim::One).unwrap();
        let cfg = paper_config();
        let seed = ModeField::gaussian(grid, (7.0, 0.0), 0.5).unwrap();
        for target in [4.5, 9.0] {
            let s0 = calibrate_s0(grid, &cfg, KernelGeometry::PolarCut, &seed, target).unwrap();
            let mut cal = cfg;
            cal.s0 = s0;
            let schmidt = schmidt_decompose(&build_kernel(grid, &cal).unwrap()).unwrap();
            let g = effective_gain(&schmidt, &seed).unwrap();
            assert_abs_diff_eq!(g, target, epsilon = 1e-6 * target);
        }
    }

    #[test]
    fn azimuthal_cut_kernel_is_translation_invariant_on_the_ring() {
        let grid = TransverseGrid::new(10.0, 64, GridDim::One).unwrap();
        let kernel = build_kernel_on(grid, &paper_config(), KernelGeometry::AzimuthalCut).unwrap();
        let k = kernel.matrix();
        // Peak on the matched-arc diagonal, equal along it.
        assert_abs_diff_eq!(k[[10, 10]], k[[40, 40]], epsilon = 1e-12);
        assert!(k[[10, 10]] > k[[10, 12]]);
        // θ̄ = θ₀ exactly on the ring: diagonal value is s0·PM(θ₀)·OV(θ₀) = s0.
        assert_abs_diff_eq!(k[[5, 5]], 1.0, epsilon = 1e-12);
    }
}
