//! Property tests for the structural invariants that hold across the whole
//! parameter space rather than at specific calibration points.

use ndarray::Array1;
use num_complex::Complex64;
use proptest::prelude::*;

use twinbeam::gain::BogoliubovTransform;
use twinbeam::state::{Beam, GaussianState};
use twinbeam::transverse::{GridDim, MirrorAxis, ModeField, TransverseGrid};

fn grid() -> TransverseGrid {
    TransverseGrid::new(6.0, 32, GridDim::Two).unwrap()
}

/// Two-pair twin-beam state with brightnesses and squeezings drawn by proptest.
fn two_pair_state(s1: f64, s2: f64, a_re: f64, a_im: f64) -> GaussianState {
    let g = TransverseGrid::new(8.0, 24, GridDim::One).unwrap();
    let m = g.n_pixels();
    let u1 = ModeField::gaussian(g, (3.0, 0.0), 1.2).unwrap();
    let u2 = ModeField::gaussian(g, (-3.0, 0.0), 1.2).unwrap();
    let c1 = u1.l2_coefficients().mapv(|z| z.re);
    // Gram-Schmidt the second mode against the first; the transform needs an
    // orthonormal family.
    let mut c2 = u2.l2_coefficients().mapv(|z| z.re);
    let overlap = c1.dot(&c2);
    c2 = &c2 - &(overlap * &c1);
    let n2 = c2.dot(&c2).sqrt();
    c2.mapv_inplace(|x| x / n2);
    let t = BogoliubovTransform::from_pairs(m, &[(s1, c1.clone(), c2.clone()), (s2, c2, c1)]).unwrap();
    GaussianState::vacuum(m)
        .unwrap()
        .seed_coherent(Beam::Probe, &u1, Complex64::new(a_re, a_im))
        .unwrap()
        .apply_bogoliubov(&t)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Parseval: the pixel-wise norm of a weighted superposition matches the
    /// Gram expression from inner products.
    #[test]
    fn superposition_norm_matches_gram(
        wx in -2.0f64..2.0, wy in -2.0f64..2.0,
        cx in -2.0f64..2.0, cy in -2.0f64..2.0,
        waist in 0.6f64..1.6,
    ) {
        let g = grid();
        let f = ModeField::gaussian(g, (cx, cy), waist).unwrap();
        let h = ModeField::lg(g, (0.5, -0.25), 1.0, 1).unwrap();
        let wf = Complex64::new(wx, wy);
        let wh = Complex64::new(0.8, -0.3);
        let da = g.pixel_area();
        let pixel_norm: f64 = f
            .values()
            .iter()
            .zip(h.values().iter())
            .map(|(a, b)| (wf * a + wh * b).norm_sqr())
            .sum::<f64>() * da;
        let ip = f.inner_product(&h).unwrap();
        let gram = wf.norm_sqr() + wh.norm_sqr() + 2.0 * (wf.conj() * wh * ip).re;
        prop_assert!((pixel_norm - gram).abs() <= 1e-9 * (1.0 + pixel_norm));
    }

    /// Mirroring permutes pixels, so norms survive to the last ulp and the
    /// double mirror is the identity.
    #[test]
    fn mirror_involution_preserves_norm(
        cx in -3.0f64..3.0, cy in -3.0f64..3.0, ell in -2i32..=2,
    ) {
        let g = grid();
        let f = ModeField::lg(g, (cx, cy), 1.0, ell).unwrap();
        for axis in [MirrorAxis::X, MirrorAxis::Y] {
            let m = f.mirrored(axis);
            prop_assert!((m.norm_sq() - f.norm_sq()).abs() <= 1e-12);
            let mm = m.mirrored(axis);
            for (a, b) in f.values().iter().zip(mm.values().iter()) {
                prop_assert_eq!(a, b);
            }
        }
    }

    /// The attenuation law: a uniform beamsplitter of power transmission t
    /// scales Mandel Q linearly, for any state and any ±1-weighted detector.
    #[test]
    fn attenuation_scales_q_linearly(
        s1 in 0.0f64..0.8, s2 in 0.0f64..0.5,
        a_re in -20.0f64..20.0, a_im in -20.0f64..20.0,
        t in 0.02f64..0.98,
    ) {
        let st = two_pair_state(s1, s2, a_re, a_im);
        let m = st.modes_per_beam();
        for sign in [1.0, -1.0] {
            let w = Array1::from_shape_fn(2 * m, |j| if j < m { 1.0 } else { sign });
            let full = st.detector_noise(&w);
            let (q1, qt) = match full {
                Ok(nr) => (nr.mandel_q, st.detector_noise_lossy(&w, [t, t]).unwrap().mandel_q),
                Err(_) => continue, // dark detector (vacuum case)
            };
            prop_assert!(
                (qt - t * q1).abs() <= 1e-9 * q1.abs().max(1e-6),
                "sign {}: Q({}) = {} vs {}", sign, t, qt, t * q1
            );
        }
    }

    /// Physicality (the uncertainty-principle matrix stays PSD) survives
    /// amplification, masking and loss.
    #[test]
    fn transforms_preserve_physicality(
        s1 in 0.0f64..0.8, s2 in 0.0f64..0.5,
        a_re in -4.0f64..4.0,
        eta in 0.1f64..1.0,
    ) {
        let st = two_pair_state(s1, s2, a_re, 0.0)
            .apply_loss(Beam::Probe, eta)
            .unwrap();
        prop_assert!(st.physicality_defect().unwrap() < 1e-8);
    }
}
