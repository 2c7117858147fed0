//! Brute-force truncated Fock-space reference for small scenarios.
//!
//! Everything here is deliberately independent of the Gaussian-state code
//! path: states are dense coefficient vectors over Fock tuples, the squeeze
//! operator is applied by exponentiating its (sparse) generator onto the
//! vector, and loss acts by binomial thinning of the joint photon-number
//! distribution. Agreement between this module and [`crate::state`] on the
//! standard scenario battery is the build's primary correctness gate.

use ndarray::array;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gain::BogoliubovTransform;
use crate::state::{Beam, GaussianState};

const LEAKAGE_THRESHOLD: f64 = 1e-10;

/// Two-mode state in a truncated Fock basis, coefficient per (n_a, n_b).
#[derive(Clone, Debug)]
pub struct FockState {
    n_max: usize,
    /// Row-major over (n_a, n_b), each in 0..=n_max.
    amps: Vec<Complex64>,
}

impl FockState {
    fn dim(&self) -> usize {
        self.n_max + 1
    }

    fn idx(&self, na: usize, nb: usize) -> usize {
        na * self.dim() + nb
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn amplitude(&self, na: usize, nb: usize) -> Complex64 {
        self.amps[self.idx(na, nb)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population outside the (n_max − 2)-photon shell plus any norm loss;
    /// large values mean the truncation touched the dynamics.
    pub fn leakage(&self) -> f64 {
        let mut inner = 0.0;
        for na in 0..=self.n_max.saturating_sub(2) {
            for nb in 0..=self.n_max.saturating_sub(2) {
                inner += self.amps[self.idx(na, nb)].norm_sqr();
            }
        }
        1.0 - inner
    }

    /// |α⟩ ⊗ |0⟩ with exact coherent amplitudes.
    pub fn coherent_seed(alpha: Complex64, n_max: usize) -> Self {
        let dim = n_max + 1;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            amps[n * dim] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
        Self { n_max, amps }
    }

    /// Joint photon-number distribution |ψ(n_a,n_b)|².
    pub fn number_distribution(&self) -> NumberDistribution {
        NumberDistribution {
            n_max: self.n_max,
            p: self.amps.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

/// Apply exp(s(a†b† − ab)) to |seed_alpha⟩ ⊗ |0⟩ in a truncated basis.
///
/// The generator is applied through a scaled exponential: the interval is
/// split into enough substeps that the Taylor series of each substep
/// converges to machine precision on the state vector. Fails if the
/// truncation shell takes more than 1e-10 of the population.
pub fn fock_two_mode_squeeze(s: f64, seed_alpha: Complex64, n_max: usize) -> Result<FockState> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidArgument(format!("squeeze parameter must be ≥ 0, got {s}")));
    }
    if n_max < 4 {
        return Err(Error::InvalidArgument("n_max too small to be meaningful".into()));
    }
    let mut state = FockState::coherent_seed(seed_alpha, n_max);
    if s > 0.0 {
        // ‖s·K‖ ~ s·(n_max+1); keep each substep mild.
        let substeps = (2.0 * s * (n_max as f64 + 1.0)).ceil().max(1.0) as usize;
        let ds = s / substeps as f64;
        for _ in 0..substeps {
            state = taylor_substep(&state, ds);
        }
    }
    let leakage = state.leakage();
    if leakage > LEAKAGE_THRESHOLD {
        return Err(Error::Truncation { leakage, threshold: LEAKAGE_THRESHOLD });
    }
    Ok(state)
}

/// One Taylor-series application of exp(ds·(a†b† − ab)).
fn taylor_substep(state: &FockState, ds: f64) -> FockState {
    let dim = state.dim();
    let mut out = state.amps.clone();
    let mut term = state.amps.clone();
    let mut next = vec![Complex64::new(0.0, 0.0); dim * dim];
    for k in 1..200 {
        // next = (ds/k) · (a†b† − ab) · term
        for z in next.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        let scale = ds / k as f64;
        for na in 0..dim {
            for nb in 0..dim {
                let z = term[na * dim + nb];
                if z == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // a†b†: |na,nb⟩ → √((na+1)(nb+1)) |na+1,nb+1⟩
                if na + 1 < dim && nb + 1 < dim {
                    let w = (((na + 1) * (nb + 1)) as f64).sqrt() * scale;
                    next[(na + 1) * dim + nb + 1] += w * z;
                }
                // −ab: |na,nb⟩ → −√(na·nb) |na−1,nb−1⟩
                if na > 0 && nb > 0 {
                    let w = ((na * nb) as f64).sqrt() * scale;
                    next[(na - 1) * dim + nb - 1] -= w * z;
                }
            }
        }
        let mut term_norm = 0.0;
        for (o, n) in out.iter_mut().zip(next.iter()) {
            *o += n;
            term_norm += n.norm_sqr();
        }
        std::mem::swap(&mut term, &mut next);
        if term_norm < 1e-36 {
            break;
        }
    }
    FockState { n_max: state.n_max, amps: out }
}

/// Exact two-mode squeezed vacuum: Σ tanhⁿ(s)/cosh(s) |n,n⟩.
pub fn tmsv_closed_form(s: f64, n_max: usize) -> FockState {
    let dim = n_max + 1;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
    let t = s.tanh();
    let mut c = 1.0 / s.cosh();
    for n in 0..dim {
        amps[n * dim + n] = Complex64::new(c, 0.0);
        c *= t;
    }
    FockState { n_max, amps }
}

/// Joint photon-number distribution over two modes.
#[derive(Clone, Debug)]
pub struct NumberDistribution {
    n_max: usize,
    /// Row-major over (n_a, n_b).
    p: Vec<f64>,
}

impl NumberDistribution {
    fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn probability(&self, na: usize, nb: usize) -> f64 {
        self.p[na * self.dim() + nb]
    }

    /// Binomial thinning of one mode: each photon independently survives with
    /// probability `eta`. Exact for photon-number statistics after a
    /// beamsplitter.
    pub fn thin(&self, mode: usize, eta: f64) -> Result<NumberDistribution> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("transmission {eta} outside [0,1]")));
        }
        if mode > 1 {
            return Err(Error::InvalidArgument("two-mode distribution has modes 0 and 1".into()));
        }
        let dim = self.dim();
        // Binomial pmf rows built by the thinning recurrence
        // B[n][m] = η B[n−1][m−1] + (1−η) B[n−1][m].
        let mut b = vec![vec![0.0f64; dim]; dim];
        b[0][0] = 1.0;
        for n in 1..dim {
            for m in 0..=n {
                let stay = if m <= n - 1 { (1.0 - eta) * b[n - 1][m] } else { 0.0 };
                let take = if m > 0 { eta * b[n - 1][m - 1] } else { 0.0 };
                b[n][m] = stay + take;
            }
        }
        let mut out = vec![0.0f64; dim * dim];
        for na in 0..dim {
            for nb in 0..dim {
                let p = self.p[na * dim + nb];
                if p == 0.0 {
                    continue;
                }
                match mode {
                    0 => {
                        for m in 0..=na {
                            out[m * dim + nb] += p * b[na][m];
                        }
                    }
                    _ => {
                        for m in 0..=nb {
                            out[na * dim + m] += p * b[nb][m];
                        }
                    }
                }
            }
        }
        Ok(NumberDistribution { n_max: self.n_max, p: out })
    }

    /// Mean and variance of Σ w_i n_i.
    pub fn weighted_stats(&self, weights: &[f64; 2]) -> (f64, f64) {
        let dim = self.dim();
        let mut mean = 0.0;
        let mut second = 0.0;
        for na in 0..dim {
            for nb in 0..dim {
                let p = self.p[na * dim + nb];
                if p == 0.0 {
                    continue;
                }
                let x = weights[0] * na as f64 + weights[1] * nb as f64;
                mean += p * x;
                second += p * x * x;
            }
        }
        (mean, second - mean * mean)
    }

    /// Total detected mean with |weights| (the shot-noise reference).
    pub fn sql_reference(&self, weights: &[f64; 2]) -> f64 {
        let (m, _) = self.weighted_stats(&[weights[0].abs(), weights[1].abs()]);
        m
    }
}

/// Photon statistics after a beamsplitter of power transmission `eta` on each
/// arm, computed on the number distribution.
pub fn fock_loss(state: &FockState, eta: [f64; 2]) -> Result<NumberDistribution> {
    state
        .number_distribution()
        .thin(0, eta[0])?
        .thin(1, eta[1])
}

/// Exact moments of Σ w_j n_j over the truncated amplitudes.
pub fn fock_number_stats(state: &FockState, weights: &[f64; 2]) -> (f64, f64) {
    state.number_distribution().weighted_stats(weights)
}

/// One comparison scenario: a squeezer of strength `s` seeded with a coherent
/// probe `alpha`, then per-arm detection losses.
#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub label: &'static str,
    pub s: f64,
    pub alpha: Complex64,
    pub eta: [f64; 2],
    pub n_max: usize,
}

impl Scenario {
    fn new(label: &'static str, s: f64, alpha: Complex64, eta: [f64; 2]) -> Self {
        // n_max ≥ 8(sinh²s + |α|²) + 20 keeps leakage below threshold.
        let budget = 8.0 * (s.sinh().powi(2) + alpha.norm_sqr()) + 20.0;
        Self { label, s, alpha, eta, n_max: budget.ceil() as usize }
    }
}

/// The standard battery: vacuum, coherent, TMSV at s ∈ {0.1, 0.3, 0.5},
/// seeded squeezers at |α|² ∈ {1, 4}, losses η ∈ {0.5, 0.9, 1}.
pub fn scenario_battery() -> Vec<Scenario> {
    let re = |x: f64| Complex64::new(x, 0.0);
    vec![
        Scenario::new("vacuum", 0.0, re(0.0), [1.0, 1.0]),
        Scenario::new("coherent |a|2=1", 0.0, re(1.0), [1.0, 1.0]),
        Scenario::new("coherent |a|2=4 eta 0.5", 0.0, re(2.0), [0.5, 0.5]),
        Scenario::new("tmsv s=0.1", 0.1, re(0.0), [1.0, 1.0]),
        Scenario::new("tmsv s=0.3", 0.3, re(0.0), [1.0, 1.0]),
        Scenario::new("tmsv s=0.5", 0.5, re(0.0), [1.0, 1.0]),
        Scenario::new("tmsv s=0.3 eta 0.9", 0.3, re(0.0), [0.9, 0.9]),
        Scenario::new("tmsv s=0.5 eta 0.9", 0.5, re(0.0), [0.9, 0.9]),
        Scenario::new("tmsv s=0.5 eta 0.5", 0.5, re(0.0), [0.5, 0.5]),
        Scenario::new("seeded s=0.3 |a|2=1", 0.3, re(1.0), [1.0, 1.0]),
        Scenario::new("seeded s=0.5 |a|2=1 eta 0.9", 0.5, re(1.0), [0.9, 0.9]),
        Scenario::new("seeded s=0.3 |a|2=4 eta 0.9", 0.3, re(2.0), [0.9, 0.9]),
        Scenario::new("seeded s=0.5 |a|2=4 eta 0.5", 0.5, re(2.0), [0.5, 0.5]),
        Scenario::new("seeded s=0.1 imag seed", 0.1, Complex64::new(0.0, 2.0), [0.9, 1.0]),
        Scenario::new("seeded s=0.5 asym loss", 0.5, re(1.0), [1.0, 0.5]),
    ]
}

/// Detector weight vectors of the comparison battery: each beam alone, the
/// balanced difference, and the sum.
const WEIGHT_SETS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0], [1.0, 1.0]];

/// Run one scenario through the Gaussian-state machinery and through the Fock
/// oracle and return the maximum relative deviation over detector means,
/// variances, and Mandel Q (deviations are normalized by max(1, |oracle|)).
pub fn compare_gaussian_fock(scenario: &Scenario) -> Result<f64> {
    // Fock route.
    let fock = fock_two_mode_squeeze(scenario.s, scenario.alpha, scenario.n_max)?;
    let dist = fock_loss(&fock, scenario.eta)?;

    // Gaussian route on one probe mode + one conjugate mode.
    let pair = BogoliubovTransform::from_pairs(
        1,
        &[(scenario.s, array![1.0], array![1.0])],
    )?;
    let state = GaussianState::vacuum(1)?
        .seed_coherent_l2(Beam::Probe, &array![Complex64::new(1.0, 0.0)], scenario.alpha)?
        .apply_bogoliubov(&pair)?
        .apply_loss(Beam::Probe, scenario.eta[0])?
        .apply_loss(Beam::Conjugate, scenario.eta[1])?;

    let mut worst = 0.0f64;
    for w in WEIGHT_SETS {
        let (f_mean, f_var) = dist.weighted_stats(&w);
        let g = state.detector_noise(&array![w[0], w[1]]);

        let (g_mean, g_var, g_q) = match g {
            Ok(nr) => (nr.mean_n, nr.var_n, Some(nr.mandel_q)),
            // Zero detected intensity (vacuum): compare means/vars directly.
            Err(Error::Undefined(_)) => {
                let mut st = 0.0;
                let w_arr = array![w[0], w[1]];
                for j in 0..2 {
                    st += w_arr[j] * state.mean()[j].norm_sqr();
                }
                (st, 0.0, None)
            }
            Err(e) => return Err(e),
        };

        worst = worst.max(rel_dev(g_mean, f_mean));
        worst = worst.max(rel_dev(g_var, f_var));
        if let Some(q) = g_q {
            let sql = dist.sql_reference(&w);
            if sql > 1e-9 {
                let f_q = f_var / sql - 1.0;
                worst = worst.max(rel_dev(q, f_q));
            }
        }
    }
    Ok(worst)
}

fn rel_dev(g: f64, f: f64) -> f64 {
    (g - f).abs() / f.abs().max(1.0)
}
