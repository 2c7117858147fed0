//! Joint probe–conjugate Gaussian state: mean field plus normal/anomalous
//! second moments, and exact photon-number statistics on any detector.
//!
//! Mode indices 0..M are the probe pixels, M..2M the conjugate pixels, in the
//! discrete (ℓ²) normalization where a coherent amplitude α on a mode means
//! ⟨n⟩ = |α|² on that mode. The moment matrices are
//!
//! ```text
//! A_jk = ⟨δa_j† δa_k⟩     (Hermitian, normal)
//! B_jk = ⟨δa_j  δa_k⟩     (symmetric, anomalous)
//! ```
//!
//! so the vacuum is all zeros and loss acts diagonally, which is what makes
//! mask application cheap. Photon means and covariances follow from the
//! Gaussian moment (Wick) expansion; see [`GaussianState::photon_cov`].

use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::detection::DetectorMask;
use crate::error::{Error, Result};
use crate::gain::BogoliubovTransform;
use crate::linalg::{self, Op};
use crate::transverse::ModeField;

/// Which of the twin beams an operation addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Beam {
    Probe,
    Conjugate,
}

impl Beam {
    /// Index offset of this beam's modes in the combined 2M-mode layout.
    pub fn offset(self, m: usize) -> usize {
        match self {
            Beam::Probe => 0,
            Beam::Conjugate => m,
        }
    }
}

/// Photon statistics of one detector configuration.
///
/// `rel_sql_db` is the detected variance in dB relative to the standard
/// quantum limit, the variance of a coherent state carrying the same total
/// detected photon number.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoiseResult {
    #[serde(rename = "mean_N")]
    pub mean_n: f64,
    #[serde(rename = "var_N")]
    pub var_n: f64,
    #[serde(rename = "mandel_Q")]
    pub mandel_q: f64,
    pub rel_sql_db: f64,
}

/// Gaussian state of M probe + M conjugate modes.
#[derive(Clone, Debug)]
pub struct GaussianState {
    m: usize,
    alpha: Array1<Complex64>,
    a: Array2<Complex64>,
    b: Array2<Complex64>,
}

impl GaussianState {
    /// Vacuum on M modes per beam: all moments zero.
    pub fn vacuum(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument(format!("need at least one mode per beam, got {m}")));
        }
        Ok(Self {
            m,
            alpha: Array1::zeros(2 * m),
            a: Array2::zeros((2 * m, 2 * m)),
            b: Array2::zeros((2 * m, 2 * m)),
        })
    }

    pub fn modes_per_beam(&self) -> usize {
        self.m
    }

    pub fn mean(&self) -> &Array1<Complex64> {
        &self.alpha
    }

    /// Mean-field amplitudes of one beam (ℓ² pixel coefficients).
    pub fn mean_of(&self, beam: Beam) -> Array1<Complex64> {
        let o = beam.offset(self.m);
        self.alpha.slice(s![o..o + self.m]).to_owned()
    }

    /// Replace the mean field, keeping the second moments.
    ///
    /// In-place variant for sweeps that reuse one amplified moment structure
    /// across many seeds; single-threaded use only.
    pub fn set_mean(&mut self, alpha: Array1<Complex64>) -> Result<()> {
        if alpha.len() != 2 * self.m {
            return Err(Error::InvalidArgument("mean vector length mismatch".into()));
        }
        self.alpha = alpha;
        Ok(())
    }

    /// Displace one beam by `amplitude` × the given normalized mode.
    pub fn seed_coherent(self, beam: Beam, mode: &ModeField, amplitude: Complex64) -> Result<Self> {
        if mode.grid().n_pixels() != self.m {
            return Err(Error::InvalidArgument(format!(
                "seed mode has {} pixels, state has {} modes per beam",
                mode.grid().n_pixels(),
                self.m
            )));
        }
        if (mode.norm_sq() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("seed mode is not normalized".into()));
        }
        self.seed_coherent_l2(beam, &mode.l2_coefficients(), amplitude)
    }

    /// Displace one beam by `amplitude` × a unit ℓ² coefficient vector.
    pub fn seed_coherent_l2(
        mut self,
        beam: Beam,
        coeffs: &Array1<Complex64>,
        amplitude: Complex64,
    ) -> Result<Self> {
        if coeffs.len() != self.m {
            return Err(Error::InvalidArgument("seed coefficient length mismatch".into()));
        }
        let norm: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("seed coefficients are not unit norm".into()));
        }
        let o = beam.offset(self.m);
        for (j, c) in coeffs.iter().enumerate() {
            self.alpha[o + j] += amplitude * c;
        }
        Ok(self)
    }

    /// Transform the state through the multimode amplifier.
    pub fn apply_bogoliubov(mut self, t: &BogoliubovTransform) -> Result<Self> {
        if t.modes_per_beam() != self.m {
            return Err(Error::InvalidArgument(format!(
                "transform acts on {} modes per beam, state has {}",
                t.modes_per_beam(),
                self.m
            )));
        }
        let moments_zero = self.a.iter().all(|z| *z == Complex64::new(0.0, 0.0))
            && self.b.iter().all(|z| *z == Complex64::new(0.0, 0.0));

        self.alpha = t.transform_mean(&self.alpha);
        if moments_zero {
            self.moments_from_vacuum(t);
        } else {
            self.moments_general(t);
        }
        #[cfg(debug_assertions)]
        if self.m <= 256 {
            let defect = self.physicality_defect().unwrap_or(f64::INFINITY);
            debug_assert!(defect < 1e-8 * (1.0 + self.a[[0, 0]].norm()), "unphysical state after amplifier (defect {defect:.2e})");
        }
        Ok(self)
    }

    /// Output moments for a vacuum-moment input: A is built per beam from the
    /// sinh-weighted Schmidt columns and B from the cosh·sinh cross terms.
    fn moments_from_vacuum(&mut self, t: &BogoliubovTransform) {
        let m = self.m;
        let (u, v, sinh, cosh) = t.factors();
        if t.rank() == 0 {
            return;
        }
        let wu = scale_columns(u, &sinh);
        let wv = scale_columns(v, &sinh);
        let cs: Array1<f64> = sinh.iter().zip(cosh.iter()).map(|(s, c)| s * c).collect();
        let wc = scale_columns(u, &cs);

        let a_pp = linalg::dgemm(Op::None, &wu, Op::Transpose, &wu);
        let a_cc = linalg::dgemm(Op::None, &wv, Op::Transpose, &wv);
        let b_pc = linalg::dgemm(Op::None, &wc, Op::Transpose, v);

        for j in 0..m {
            for k in 0..m {
                self.a[[j, k]] = Complex64::new(a_pp[[j, k]], 0.0);
                self.a[[m + j, m + k]] = Complex64::new(a_cc[[j, k]], 0.0);
                let bb = Complex64::new(b_pc[[j, k]], 0.0);
                self.b[[j, m + k]] = bb;
                self.b[[m + k, j]] = bb;
            }
        }
    }

    /// General dense moment update; quadratic in the full 2M dimension, so
    /// meant for chained transforms at small mode counts.
    fn moments_general(&mut self, t: &BogoliubovTransform) {
        let n = 2 * self.m;
        let uu = to_complex(&t.combined_u());
        let vv = to_complex(&t.combined_v());

        let b_conj = self.b.mapv(|z| z.conj());
        let mut id_at = self.a.t().to_owned();
        for j in 0..n {
            id_at[[j, j]] += Complex64::new(1.0, 0.0);
        }

        // A' = 𝒰A𝒰ᵀ + 𝒰B*𝒱ᵀ + 𝒱B𝒰ᵀ + 𝒱(I+Aᵀ)𝒱ᵀ  (𝒰, 𝒱 real)
        let a_new = linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &uu, Op::None, &self.a), Op::Transpose, &uu)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &uu, Op::None, &b_conj), Op::Transpose, &vv)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &vv, Op::None, &self.b), Op::Transpose, &uu)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &vv, Op::None, &id_at), Op::Transpose, &vv);

        // B' = 𝒰B𝒰ᵀ + 𝒰(I+Aᵀ)𝒱ᵀ + 𝒱A𝒰ᵀ + 𝒱B*𝒱ᵀ
        let b_new = linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &uu, Op::None, &self.b), Op::Transpose, &uu)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &uu, Op::None, &id_at), Op::Transpose, &vv)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &vv, Op::None, &self.a), Op::Transpose, &uu)
            + linalg::zgemm(Op::None, &linalg::zgemm(Op::None, &vv, Op::None, &b_conj), Op::Transpose, &vv);

        self.a = a_new;
        self.b = b_new;
    }

    /// Pass one beam through a pixel-wise amplitude mask (loss to vacuum).
    pub fn apply_mask(self, beam: Beam, mask: &DetectorMask) -> Result<Self> {
        if mask.grid().n_pixels() != self.m {
            return Err(Error::InvalidArgument("mask grid does not match state".into()));
        }
        for &t in mask.amplitude().iter() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("mask transmission {t} outside [0,1]")));
            }
        }
        Ok(self.apply_transmission(beam, mask.amplitude()))
    }

    /// Uniform power loss `eta` on one beam.
    pub fn apply_loss(self, beam: Beam, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("loss transmission {eta} outside [0,1]")));
        }
        let t = Array1::from_elem(self.m, eta.sqrt());
        Ok(self.apply_transmission(beam, &t))
    }

    fn apply_transmission(mut self, beam: Beam, t: &Array1<f64>) -> Self {
        let o = beam.offset(self.m);
        let n = 2 * self.m;
        for j in 0..self.m {
            let tj = t[j];
            if tj == 1.0 {
                continue;
            }
            self.alpha[o + j] *= tj;
            for k in 0..n {
                self.a[[o + j, k]] *= tj;
                self.b[[o + j, k]] *= tj;
            }
            for k in 0..n {
                self.a[[k, o + j]] *= tj;
                self.b[[k, o + j]] *= tj;
            }
        }
        self
    }

    /// ⟨Σ w_j n_j⟩ = Σ w_j (A_jj + |α_j|²).
    pub fn photon_mean(&self, weights: &Array1<f64>) -> f64 {
        assert_eq!(weights.len(), 2 * self.m, "weight vector length");
        weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * (self.a[[j, j]].re + self.alpha[j].norm_sqr()))
            .sum()
    }

    /// Cov(N_j, N_k) from the Gaussian moment expansion:
    ///
    /// ```text
    /// |A_jk|² + |B_jk|² + δ_jk (A_jj + |α_j|²)
    ///   + 2 Re[ α_j* α_k A_kj + α_j* α_k* B_jk ]
    /// ```
    pub fn photon_cov(&self, j: usize, k: usize) -> f64 {
        let mut c = self.a[[j, k]].norm_sqr() + self.b[[j, k]].norm_sqr();
        if j == k {
            c += self.a[[j, j]].re + self.alpha[j].norm_sqr();
        }
        let cross = self.alpha[j].conj() * self.alpha[k] * self.a[[k, j]]
            + self.alpha[j].conj() * self.alpha[k].conj() * self.b[[j, k]];
        c + 2.0 * cross.re
    }

    /// Statistics of the detector observable Σ w_j n_j.
    pub fn detector_noise(&self, weights: &Array1<f64>) -> Result<NoiseResult> {
        self.detector_noise_lossy(weights, [1.0, 1.0])
    }

    /// Same as [`detector_noise`](Self::detector_noise) with a uniform power
    /// transmission per beam folded in analytically, equivalent to
    /// `apply_loss` on each beam followed by `detector_noise` but without
    /// copying the moment matrices.
    pub fn detector_noise_lossy(&self, weights: &Array1<f64>, eta: [f64; 2]) -> Result<NoiseResult> {
        let n = 2 * self.m;
        if weights.len() != n {
            return Err(Error::InvalidArgument("weight vector length mismatch".into()));
        }
        for e in eta {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidArgument(format!("loss transmission {e} outside [0,1]")));
            }
        }
        // Effective quadratic weights u_j = w_j η_j; the shot-noise (δ) term
        // scales with a single power of η.
        let u = Array1::from_shape_fn(n, |j| {
            weights[j] * if j < self.m { eta[0] } else { eta[1] }
        });

        let mut mean = 0.0;
        let mut sql = 0.0;
        let mut t_delta = 0.0;
        for j in 0..n {
            let d = self.a[[j, j]].re + self.alpha[j].norm_sqr();
            mean += u[j] * d;
            sql += u[j].abs() * d;
            let e = if j < self.m { eta[0] } else { eta[1] };
            t_delta += weights[j] * weights[j] * e * d;
        }
        if !(sql.is_finite() && sql > 1e-300) {
            return Err(Error::Undefined("zero detected intensity".into()));
        }

        // x = u ∘ α enters both mean-field beat terms.
        let x = Array1::from_shape_fn(n, |j| u[j] * self.alpha[j]);
        let mut quad = 0.0;
        let mut beat_a = Complex64::new(0.0, 0.0);
        let mut beat_b = Complex64::new(0.0, 0.0);
        for j in 0..n {
            if u[j] == 0.0 && x[j] == Complex64::new(0.0, 0.0) {
                // Row contributes only through u_j and x_j factors.
                continue;
            }
            let arow = self.a.row(j);
            let brow = self.b.row(j);
            let mut qa = 0.0;
            let mut qb = 0.0;
            let mut za = Complex64::new(0.0, 0.0);
            let mut zb = Complex64::new(0.0, 0.0);
            for k in 0..n {
                if u[k] != 0.0 {
                    qa += u[k] * arow[k].norm_sqr();
                    qb += u[k] * brow[k].norm_sqr();
                }
                // Σ_k A_jk x̄_k and Σ_k B_jk x̄_k (for the beat terms below)
                za += arow[k] * x[k].conj();
                zb += brow[k] * x[k].conj();
            }
            quad += u[j] * (qa + qb);
            // Σ_jk x̄_j x_k A_kj = Σ_j x_j Σ_k A_jk x̄_k
            beat_a += x[j] * za;
            beat_b += x[j].conj() * zb;
        }
        let var = (quad + t_delta + 2.0 * beat_a.re + 2.0 * beat_b.re).max(0.0);

        let ratio = (var / sql).max(1e-300);
        Ok(NoiseResult {
            mean_n: mean,
            var_n: var,
            mandel_q: ratio - 1.0,
            rel_sql_db: 10.0 * ratio.log10(),
        })
    }

    /// Mandel Q of one partially detected beam: detector weights are the
    /// squared mask transmission on that beam, zero on the other.
    pub fn mandel_q_single_beam(&self, beam: Beam, mask: &DetectorMask) -> Result<f64> {
        if mask.grid().n_pixels() != self.m {
            return Err(Error::InvalidArgument("mask grid does not match state".into()));
        }
        let o = beam.offset(self.m);
        let mut w = Array1::zeros(2 * self.m);
        for (j, &t) in mask.amplitude().iter().enumerate() {
            w[o + j] = t * t;
        }
        Ok(self.detector_noise(&w)?.mandel_q)
    }

    /// Smallest-eigenvalue defect of the physicality matrix
    /// [[A+I, B], [B†, Aᵀ]]; zero (to rounding) for any physical state.
    pub fn physicality_defect(&self) -> Result<f64> {
        let n = 2 * self.m;
        let mut h = Array2::<Complex64>::zeros((2 * n, 2 * n));
        for j in 0..n {
            for k in 0..n {
                h[[j, k]] = self.a[[j, k]];
                h[[j, n + k]] = self.b[[j, k]];
                h[[n + j, k]] = self.b[[k, j]].conj();
                h[[n + j, n + k]] = self.a[[k, j]];
            }
            h[[j, j]] += Complex64::new(1.0, 0.0);
        }
        let w = linalg::eigvals_hermitian(&h)?;
        Ok((-w[0]).max(0.0))
    }

    /// Direct read access for tests and diagnostics.
    pub fn moment_a(&self) -> &Array2<Complex64> {
        &self.a
    }

    pub fn moment_b(&self) -> &Array2<Complex64> {
        &self.b
    }
}

fn scale_columns(m: &Array2<f64>, d: &Array1<f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for (mut col, &f) in out.columns_mut().into_iter().zip(d.iter()) {
        col *= f;
    }
    out
}

fn to_complex(m: &Array2<f64>) -> Array2<Complex64> {
    m.mapv(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gain::BogoliubovTransform;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn single_pair(s: f64) -> BogoliubovTransform {
        BogoliubovTransform::from_pairs(1, &[(s, array![1.0], array![1.0])]).unwrap()
    }

    fn seeded_pair_state(s: f64, alpha: Complex64) -> GaussianState {
        GaussianState::vacuum(1)
            .unwrap()
            .seed_coherent_l2(Beam::Probe, &array![Complex64::new(1.0, 0.0)], alpha)
            .unwrap()
            .apply_bogoliubov(&single_pair(s))
            .unwrap()
    }

    #[test]
    fn vacuum_is_empty_and_physical() {
        let st = GaussianState::vacuum(3).unwrap();
        let w = Array1::from_elem(6, 1.0);
        assert_eq!(st.photon_mean(&w), 0.0);
        assert!(st.detector_noise(&w).is_err()); // zero intensity → Q undefined
        assert_eq!(st.physicality_defect().unwrap(), 0.0);
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn coherent_seed_statistics() {
        let alpha = Complex64::new(10.0, 0.0); // |α|² = 100
        let st = GaussianState::vacuum(1)
            .unwrap()
            .seed_coherent_l2(Beam::Probe, &array![Complex64::new(1.0, 0.0)], alpha)
            .unwrap();
        let w = array![1.0, 0.0];
        assert_abs_diff_eq!(st.photon_mean(&w), 100.0, epsilon = 1e-12);
        // Poissonian: Var = mean, Q = 0, 0 dB.
        let nr = st.detector_noise(&w).unwrap();
        assert_abs_diff_eq!(nr.var_n, 100.0, epsilon = 1e-10);
        assert_abs_diff_eq!(nr.mandel_q, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nr.rel_sql_db, 0.0, epsilon = 1e-12);

        // Same under any ±1 weighting.
        let nr = st.detector_noise(&array![1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(nr.mandel_q, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_transform_is_identity() {
        let st = seeded_pair_state(0.0, Complex64::new(2.0, 1.0));
        assert_abs_diff_eq!(st.moment_a()[[0, 0]].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.mean()[0].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.mean()[1].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spontaneous_pair_emission() {
        // Vacuum through a single squeezer: thermal marginals with sinh²s
        // photons each, perfectly correlated in photon number.
        let s = 0.5f64;
        let st = seeded_pair_state(s, Complex64::new(0.0, 0.0));
        let sh2 = s.sinh().powi(2);
        assert_abs_diff_eq!(st.moment_a()[[0, 0]].re, sh2, epsilon = 1e-12);
        assert_abs_diff_eq!(st.moment_a()[[1, 1]].re, sh2, epsilon = 1e-12);
        assert_abs_diff_eq!(st.moment_b()[[0, 1]].re, s.sinh() * s.cosh(), epsilon = 1e-12);

        // Thermal marginal: Var = n̄(n̄+1).
        assert_abs_diff_eq!(st.photon_cov(0, 0), sh2 * (sh2 + 1.0), epsilon = 1e-12);

        // Photon-pair balance and zero difference variance.
        let diff = st.detector_noise(&array![1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(diff.mean_n, 0.0, epsilon = 1e-12);
        assert!(diff.var_n < 1e-12);

        let defect = st.physicality_defect().unwrap();
        assert!(defect < 1e-10);
    }

    #[test]
    fn bright_twin_beam_gains() {
        // G = cosh²s = 4.5 amplifier on a 10⁶-photon seed: probe 4.5·10⁶,
        // conjugate 3.5·10⁶ (+ one spontaneous pair's worth).
        let g = 4.5f64;
        let s = g.sqrt().acosh();
        let alpha = Complex64::new(1000.0, 0.0);
        let st = seeded_pair_state(s, alpha);
        let probe = st.photon_mean(&array![1.0, 0.0]);
        let conj = st.photon_mean(&array![0.0, 1.0]);
        assert_abs_diff_eq!(probe, 4.5e6, epsilon = 5.0);
        assert_abs_diff_eq!(conj, 3.5e6, epsilon = 5.0);

        // Ideal intensity-difference squeezing: var/SQL = 1/(2G−1).
        let nr = st.detector_noise(&array![1.0, -1.0]).unwrap();
        let expected_db = 10.0 * (1.0f64 / 8.0).log10();
        assert_abs_diff_eq!(nr.rel_sql_db, expected_db, epsilon = 1e-3);

        // With η = 0.9 on both arms: 1 − η + η/(2G−1) = 0.2125 → −6.73 dB.
        let nr = st.detector_noise_lossy(&array![1.0, -1.0], [0.9, 0.9]).unwrap();
        assert_abs_diff_eq!(nr.rel_sql_db, 10.0 * 0.2125f64.log10(), epsilon = 1e-3);

        // Amplified single beam: var/SQL → 2G − 1, i.e. Q → 2G − 2 = 7.
        let nr = st.detector_noise(&array![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(nr.mandel_q, 7.0, epsilon = 1e-4);
        assert_abs_diff_eq!(nr.rel_sql_db, 10.0 * 8.0f64.log10(), epsilon = 1e-4);
    }

    #[test]
    fn lossy_detection_routes_agree() {
        // detector_noise_lossy must match apply_loss + detector_noise.
        let s = 0.4f64;
        let st = seeded_pair_state(s, Complex64::new(2.0, 1.0));
        let w = array![1.0, -1.0];
        let direct = st.detector_noise_lossy(&w, [0.8, 0.6]).unwrap();
        let routed = st
            .clone()
            .apply_loss(Beam::Probe, 0.8)
            .unwrap()
            .apply_loss(Beam::Conjugate, 0.6)
            .unwrap()
            .detector_noise(&w)
            .unwrap();
        assert_abs_diff_eq!(direct.mean_n, routed.mean_n, epsilon = 1e-10);
        assert_abs_diff_eq!(direct.var_n, routed.var_n, epsilon = 1e-10);
        assert_abs_diff_eq!(direct.mandel_q, routed.mandel_q, epsilon = 1e-10);
    }

    #[test]
    fn uniform_attenuation_scales_q_linearly() {
        let s = 0.5f64;
        let st = seeded_pair_state(s, Complex64::new(1.5, -0.5));
        for w in [array![1.0, 0.0], array![1.0, -1.0], array![1.0, 1.0]] {
            let q1 = st.detector_noise(&w).unwrap().mandel_q;
            for t in [0.15, 0.5, 0.85] {
                let qt = st.detector_noise_lossy(&w, [t, t]).unwrap().mandel_q;
                assert_abs_diff_eq!(qt, t * q1, epsilon = 1e-9 * q1.abs().max(1.0));
            }
        }
    }

    #[test]
    fn coherent_state_stays_coherent_under_loss() {
        let st = GaussianState::vacuum(1)
            .unwrap()
            .seed_coherent_l2(Beam::Probe, &array![Complex64::new(1.0, 0.0)], Complex64::new(5.0, 0.0))
            .unwrap()
            .apply_loss(Beam::Probe, 0.5)
            .unwrap();
        let nr = st.detector_noise(&array![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(nr.mean_n, 12.5, epsilon = 1e-12);
        assert_abs_diff_eq!(nr.mandel_q, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn general_and_vacuum_moment_paths_agree() {
        // Apply a squeezer to vacuum via the fast path, then force the dense
        // path with a second (weaker) squeezer and compare against the dense
        // path used for both stages.
        let t1 = single_pair(0.3);
        let t2 = single_pair(0.2);

        let fast_then_general = GaussianState::vacuum(1)
            .unwrap()
            .apply_bogoliubov(&t1)
            .unwrap()
            .apply_bogoliubov(&t2)
            .unwrap();

        // Two consecutive squeezers on the same pair compose to s₁+s₂.
        let combined = GaussianState::vacuum(1)
            .unwrap()
            .apply_bogoliubov(&single_pair(0.5))
            .unwrap();

        for j in 0..2 {
            for k in 0..2 {
                assert_abs_diff_eq!(
                    fast_then_general.moment_a()[[j, k]].re,
                    combined.moment_a()[[j, k]].re,
                    epsilon = 1e-12
                );
                assert_abs_diff_eq!(
                    fast_then_general.moment_b()[[j, k]].re,
                    combined.moment_b()[[j, k]].re,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn masked_detection_equals_weighted_detection_for_binary_masks() {
        use crate::detection::DetectorMask;
        use crate::transverse::{GridDim, ModeField, TransverseGrid};

        let grid = TransverseGrid::new(4.0, 16, GridDim::One).unwrap();
        let m = grid.n_pixels();
        let mode = ModeField::gaussian(grid, (1.0, 0.0), 1.0).unwrap();
        let u = mode.l2_coefficients().mapv(|z| z.re);
        let tr = BogoliubovTransform::from_pairs(m, &[(0.4, u.clone(), u.clone())]).unwrap();
        let st = GaussianState::vacuum(m)
            .unwrap()
            .seed_coherent(Beam::Probe, &mode, Complex64::new(30.0, 0.0))
            .unwrap()
            .apply_bogoliubov(&tr)
            .unwrap();

        let mask = DetectorMask::iris(grid, (1.0, 0.0), 0.8).unwrap();
        // Route 1: weights = mask² on the probe.
        let q_weighted = st.mandel_q_single_beam(Beam::Probe, &mask).unwrap();
        // Route 2: clip the state, then detect everything on the probe.
        let mut w = Array1::zeros(2 * m);
        for j in 0..m {
            w[j] = 1.0;
        }
        let q_masked = st
            .clone()
            .apply_mask(Beam::Probe, &mask)
            .unwrap()
            .detector_noise(&w)
            .unwrap()
            .mandel_q;
        assert_abs_diff_eq!(q_weighted, q_masked, epsilon = 1e-10 * q_weighted.abs());
    }

    #[test]
    fn seed_orthogonal_to_detector_sees_nothing() {
        use crate::detection::DetectorMask;
        use crate::transverse::{GridDim, ModeField, TransverseGrid};

        let grid = TransverseGrid::new(10.0, 64, GridDim::One).unwrap();
        let m = grid.n_pixels();
        let mode = ModeField::gaussian(grid, (6.0, 0.0), 0.5).unwrap();
        let st = GaussianState::vacuum(m)
            .unwrap()
            .seed_coherent(Beam::Probe, &mode, Complex64::new(1000.0, 0.0))
            .unwrap();
        let mask = DetectorMask::iris(grid, (-6.0, 0.0), 2.0).unwrap();
        let o = Beam::Probe.offset(m);
        let mut w = Array1::zeros(2 * m);
        for (j, &t) in mask.amplitude().iter().enumerate() {
            w[o + j] = t * t;
        }
        assert!(st.photon_mean(&w) < 1e-9 * 1e6);
    }
}
