//! Gaussian peak/dip fitting and slit deconvolution for the scan analyses.
//!
//! The model is `y = offset + amplitude · exp(−8(x−center)²/width²)` with
//! `width` the full width at which the amplitude term falls to e⁻² of its
//! peak. Fitting is Levenberg-Marquardt with analytic derivatives and a
//! deterministic moment-based initialization, so identical data always gives
//! identical parameters.

use crate::error::{Error, Result};

/// The four fitted parameters plus the fit quality.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct GaussianFit {
    pub center: f64,
    /// Full width at 1/e² of the amplitude term.
    pub width_e2: f64,
    /// Signed: negative for a dip.
    pub amplitude: f64,
    pub offset: f64,
    pub rms_residual: f64,
}

fn model(x: f64, p: &[f64; 4]) -> f64 {
    let [center, width, amplitude, offset] = *p;
    offset + amplitude * (-8.0 * (x - center).powi(2) / (width * width)).exp()
}

fn jacobian_row(x: f64, p: &[f64; 4]) -> [f64; 4] {
    let [center, width, amplitude, _] = *p;
    let u = x - center;
    let e = (-8.0 * u * u / (width * width)).exp();
    [
        amplitude * e * 16.0 * u / (width * width),
        amplitude * e * 16.0 * u * u / (width * width * width),
        e,
        1.0,
    ]
}

fn chi2(points: &[(f64, f64)], p: &[f64; 4]) -> f64 {
    points.iter().map(|&(x, y)| (y - model(x, p)).powi(2)).sum()
}

/// Least-squares Gaussian fit of `(x, y)` points.
///
/// Initialization: the offset starts from the edge samples, the extremum
/// (largest |y − offset|) sets the amplitude sign and the center, and the
/// second moment of |y − offset| sets the width. Flat data is rejected.
pub fn fit_gaussian(points: &[(f64, f64)]) -> Result<GaussianFit> {
    if points.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "gaussian fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let y_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = y_max - y_min;
    let x_span = pts.last().unwrap().0 - pts.first().unwrap().0;
    if !(span.is_finite() && x_span.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data".into()));
    }
    if span <= 1e-12 * (1.0 + y_max.abs()) {
        return Err(Error::FitNonConvergence("flat data has no peak to fit".into()));
    }

    // Edge-based offset, extremum-based center/amplitude.
    let k = (pts.len() / 8).max(1);
    let offset0 = (pts.iter().take(k).map(|p| p.1).sum::<f64>()
        + pts.iter().rev().take(k).map(|p| p.1).sum::<f64>())
        / (2 * k) as f64;
    let (xe, ye) = pts
        .iter()
        .copied()
        .max_by(|a, b| (a.1 - offset0).abs().total_cmp(&(b.1 - offset0).abs()))
        .unwrap();
    let amp0 = ye - offset0;

    // Width from the second moment of |y − offset| around the extremum.
    let mut wsum = 0.0;
    let mut m2 = 0.0;
    for &(x, y) in &pts {
        let w = (y - offset0).abs();
        wsum += w;
        m2 += w * (x - xe).powi(2);
    }
    let sigma = (m2 / wsum).sqrt().max(x_span / pts.len() as f64);
    let mut p = [xe, 4.0 * sigma, amp0, offset0];

    let mut lambda = 1e-3;
    let mut prev = chi2(&pts, &p);
    let mut converged = false;
    for _ in 0..200 {
        // Normal equations JᵀJ δ = Jᵀr with L-M damping.
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        for &(x, y) in &pts {
            let row = jacobian_row(x, &p);
            let r = y - model(x, &p);
            for i in 0..4 {
                jtr[i] += row[i] * r;
                for j in 0..4 {
                    jtj[i][j] += row[i] * row[j];
                }
            }
        }
        let mut damped = jtj;
        for i in 0..4 {
            damped[i][i] *= 1.0 + lambda;
        }
        let delta = match solve4(&damped, &jtr) {
            Some(d) => d,
            None => break,
        };
        let mut trial = p;
        for i in 0..4 {
            trial[i] += delta[i];
        }
        trial[1] = trial[1].abs().max(1e-9 * x_span.max(1.0));
        let c = chi2(&pts, &trial);
        if c < prev {
            let step: f64 = delta
                .iter()
                .zip(p.iter())
                .map(|(d, v)| (d / v.abs().max(1e-9)).abs())
                .fold(0.0, f64::max);
            p = trial;
            prev = c;
            lambda = (lambda * 0.3).max(1e-12);
            if step < 1e-10 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    // Accept near-stationary solutions even without an early exit.
    if !converged && !prev.is_finite() {
        return Err(Error::FitNonConvergence("chi² diverged".into()));
    }
    let rms = (prev / pts.len() as f64).sqrt();
    if p[1] > 100.0 * x_span {
        return Err(Error::FitNonConvergence("fitted width exceeds the data span".into()));
    }
    Ok(GaussianFit {
        center: p[0],
        width_e2: p[1],
        amplitude: p[2],
        offset: p[3],
        rms_residual: rms,
    })
}

fn solve4(a: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    let mut m = *a;
    let mut r = *b;
    for col in 0..4 {
        let mut piv = col;
        for row in col + 1..4 {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0f64; 4];
    for i in (0..4).rev() {
        let mut s = r[i];
        for k in i + 1..4 {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

/// 1/e² full width of the Gaussian with the same second moment as a top-hat
/// slit of the given full width: 2√(2/3) ≈ 1.633 × the slit width.
pub fn slit_equivalent_gaussian_width(slit_width: f64) -> f64 {
    2.0 * (2.0f64 / 3.0).sqrt() * slit_width
}

/// Remove two (equivalent-Gaussian) slit widths from a measured width in
/// quadrature: θc = √(w² − w1² − w2²).
pub fn deconvolve_slit(width_measured: f64, slit_w1: f64, slit_w2: f64) -> Result<f64> {
    for (name, v) in [
        ("width_measured", width_measured),
        ("slit_w1", slit_w1),
        ("slit_w2", slit_w2),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be ≥ 0, got {v}")));
        }
    }
    let sub = slit_w1 * slit_w1 + slit_w2 * slit_w2;
    let rad = width_measured * width_measured - sub;
    if rad < 0.0 {
        return Err(Error::InconsistentWidths { measured: width_measured, subtracted: sub.sqrt() });
    }
    Ok(rad.sqrt())
}
