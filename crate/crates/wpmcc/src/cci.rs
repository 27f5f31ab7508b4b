//! CPU-cycle-information (CCI) model.
//!
//! The CCI is the random number of CPU cycles needed per input bit. From its
//! distribution this module derives everything the policy solvers consume:
//! the almost-sure cycle cap `N0` (smallest integer with `Pr(X > N0) <= eps`),
//! the execution-probability sequence `p_k = Pr(L X >= k)`, and the cubic
//! scaling factors `theta0, theta1, phi0, phi1` used by the per-block
//! feasibility thresholds and energy envelopes.

use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::{gamma_ur, ln_gamma};
use thiserror::Error;

use crate::numerics::KahanSum;

/// Default cap on the length of a materialized execution-probability
/// sequence (1e7 entries is roughly 80 MB).
pub const DEFAULT_MAX_SEQUENCE_LEN: usize = 10_000_000;

/// Errors from CCI model construction and evaluation.
#[derive(Debug, Error)]
pub enum CciError {
    #[error("invalid CCI parameter: {0}")]
    InvalidParameter(String),
    #[error("execution-probability sequence needs {required} entries, cap is {cap}")]
    SequenceTooLong { required: usize, cap: usize },
}

/// Distribution of the cycles-per-bit random variable.
#[derive(Debug, Clone)]
enum CciDistribution {
    /// Gamma with shape `alpha` and *scale* `beta` (mean cycles/bit is
    /// `alpha * beta`).
    Gamma { shape: f64, scale: f64 },
    /// Point mass at `cycles_per_bit`; a test distribution.
    Deterministic { cycles_per_bit: f64 },
}

/// The CCI distribution plus the tail parameter `epsilon`, with the derived
/// cycle cap and a survival-function lookup table cached at construction.
///
/// Immutable after construction and shareable across threads.
#[derive(Debug, Clone)]
pub struct CciModel {
    dist: CciDistribution,
    epsilon: f64,
    n0: u32,
    max_sequence_len: usize,
    table: Option<SurvivalTable>,
}

impl CciModel {
    /// Gamma-distributed CCI. `scale` is in cycles per bit.
    pub fn gamma(shape: f64, scale: f64, epsilon: f64) -> Result<Self, CciError> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(CciError::InvalidParameter(format!("shape = {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CciError::InvalidParameter(format!("scale = {scale}")));
        }
        check_epsilon(epsilon)?;
        let dist = CciDistribution::Gamma { shape, scale };
        let n0 = derive_n0(&dist, epsilon);
        // Hermite interpolation needs a finite pdf at the left edge, which
        // fails for shape < 1; fall back to direct evaluation there.
        let table = (shape >= 1.0).then(|| SurvivalTable::build(shape, scale, n0 as f64 + 2.0));
        Ok(CciModel {
            dist,
            epsilon,
            n0,
            max_sequence_len: DEFAULT_MAX_SEQUENCE_LEN,
            table,
        })
    }

    /// Deterministic CCI `X = cycles_per_bit`; intended for tests.
    pub fn deterministic(cycles_per_bit: f64, epsilon: f64) -> Result<Self, CciError> {
        if !(cycles_per_bit > 0.0 && cycles_per_bit.is_finite()) {
            return Err(CciError::InvalidParameter(format!(
                "cycles_per_bit = {cycles_per_bit}"
            )));
        }
        check_epsilon(epsilon)?;
        let dist = CciDistribution::Deterministic { cycles_per_bit };
        let n0 = derive_n0(&dist, epsilon);
        Ok(CciModel {
            dist,
            epsilon,
            n0,
            max_sequence_len: DEFAULT_MAX_SEQUENCE_LEN,
            table: None,
        })
    }

    /// Override the cap on materialized sequence length.
    pub fn with_max_sequence_len(mut self, cap: usize) -> Self {
        self.max_sequence_len = cap.max(1);
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Smallest positive integer `n` with `Pr(X > n) <= epsilon`.
    pub fn n0(&self) -> u32 {
        self.n0
    }

    /// `Pr(X > x)`.
    pub fn prob_cycles_above(&self, x: f64) -> f64 {
        match &self.dist {
            CciDistribution::Gamma { shape, scale } => self.gamma_survival(*shape, *scale, x),
            CciDistribution::Deterministic { cycles_per_bit } => {
                if x < *cycles_per_bit {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `Pr(X >= x)`; identical to [`prob_cycles_above`](Self::prob_cycles_above)
    /// for the continuous Gamma case but not for the deterministic one.
    pub fn prob_cycles_at_least(&self, x: f64) -> f64 {
        match &self.dist {
            CciDistribution::Gamma { shape, scale } => self.gamma_survival(*shape, *scale, x),
            CciDistribution::Deterministic { cycles_per_bit } => {
                if x <= *cycles_per_bit {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn gamma_survival(&self, shape: f64, scale: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.table {
            Some(t) if x <= t.u_max => t.eval(x),
            _ => gamma_ur(shape, x / scale),
        }
    }

    /// The execution-probability sequence for `data_bits` of input:
    /// `p_k = Pr(L X >= k)` for `k = 1..N` with `N = ceil(L * N0)`.
    pub fn execution_probabilities(
        &self,
        data_bits: f64,
    ) -> Result<ExecutionProbabilities, CciError> {
        if !(data_bits > 0.0 && data_bits.is_finite()) {
            return Err(CciError::InvalidParameter(format!(
                "data_bits = {data_bits}"
            )));
        }
        // snap near-integral cycle counts before rounding up, so sizes that
        // sit on the cycle grid modulo one rounding do not gain a cycle
        let raw = data_bits * self.n0 as f64;
        let nearest = raw.round();
        let n = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) {
            nearest as usize
        } else {
            raw.ceil() as usize
        };
        if n > self.max_sequence_len {
            return Err(CciError::SequenceTooLong {
                required: n,
                cap: self.max_sequence_len,
            });
        }
        let mut probs = Vec::with_capacity(n);
        let inv_l = 1.0 / data_bits;
        let mut prev = 1.0f64;
        for k in 1..=n {
            // interpolation jitter below one ulp must not break monotonicity
            let p = self.prob_cycles_at_least(k as f64 * inv_l).min(prev);
            probs.push(p);
            prev = p;
        }
        Ok(ExecutionProbabilities {
            data_bits,
            n0: self.n0,
            probs,
        })
    }

    /// Cubic scaling factors evaluated exactly from the discrete sums at the
    /// reference size `ref_bits`.
    ///
    /// With `N = ceil(ref_bits * N0)` and `p_k` the execution probabilities:
    /// `theta1 = N^3 / l^3`, `theta0 = (sum p^(1/3))^2 (sum p^(-2/3)) / l^3`,
    /// `phi0 = (sum p^(1/3))^3 / l^3` and `phi1 = N^2 (sum p) / l^3`, so that
    /// the feasibility thresholds and the energy envelopes scale as `l^3`.
    pub fn scaling_factors(&self, ref_bits: f64) -> Result<ScalingFactors, CciError> {
        let probs = self.execution_probabilities(ref_bits)?;
        let n = probs.len() as f64;
        let (mut s13, mut sm23, mut s1) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
        for &p in probs.as_slice() {
            let c = p.cbrt();
            s13.add(c);
            sm23.add(1.0 / (c * c));
            s1.add(p);
        }
        let l3 = ref_bits * ref_bits * ref_bits;
        let u = s13.value();
        Ok(ScalingFactors {
            theta0: u * u * sm23.value() / l3,
            theta1: n * n * n / l3,
            phi0: u * u * u / l3,
            phi1: n * n * s1.value() / l3,
        })
    }

    /// Draw one realization of the cycles-per-bit variable `X`.
    pub fn sample_cycles_per_bit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.dist {
            CciDistribution::Gamma { shape, scale } => {
                rand_distr::Gamma::new(*shape, *scale)
                    .expect("parameters validated at construction")
                    .sample(rng)
            }
            CciDistribution::Deterministic { cycles_per_bit } => *cycles_per_bit,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), CciError> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(CciError::InvalidParameter(format!(
            "epsilon = {epsilon}, want 0 < epsilon <= 0.5"
        )));
    }
    Ok(())
}

fn derive_n0(dist: &CciDistribution, epsilon: f64) -> u32 {
    let tail = |n: f64| match dist {
        CciDistribution::Gamma { shape, scale } => gamma_ur(*shape, n / scale),
        CciDistribution::Deterministic { cycles_per_bit } => {
            if n < *cycles_per_bit {
                1.0
            } else {
                0.0
            }
        }
    };
    let mut hi = 1u64;
    while tail(hi as f64) > epsilon {
        hi *= 2;
    }
    let mut lo = hi / 2; // tail(lo) > eps (or lo == 0)
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if tail(mid as f64) <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as u32
}

/// Execution probabilities `p_1 >= p_2 >= ... >= p_N` for a given input size.
#[derive(Debug, Clone)]
pub struct ExecutionProbabilities {
    data_bits: f64,
    n0: u32,
    probs: Vec<f64>,
}

impl ExecutionProbabilities {
    /// The empty sequence for a zero-bit input.
    pub fn empty(n0: u32) -> Self {
        ExecutionProbabilities {
            data_bits: 0.0,
            n0,
            probs: Vec::new(),
        }
    }

    pub fn data_bits(&self) -> f64 {
        self.data_bits
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    /// Number of scheduled cycles `N = ceil(L * N0)`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// The four cubic scaling factors `theta0 > theta1`, `phi0 < phi1` that turn
/// per-block thresholds and energy envelopes into closed forms in `l^3`.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFactors {
    pub theta0: f64,
    pub theta1: f64,
    pub phi0: f64,
    pub phi1: f64,
}

impl ScalingFactors {
    /// `1 - phi1/theta1`, the residual-energy retention fraction; always
    /// non-negative because `phi1 <= theta1`.
    pub fn phi_bar(&self) -> f64 {
        (1.0 - self.phi1 / self.theta1).max(0.0)
    }
}

/// Uniform-grid cubic Hermite interpolant of the Gamma survival function,
/// using the analytic density as the node derivative. Node error is far
/// below f64 rounding for the step chosen here.
#[derive(Debug, Clone)]
struct SurvivalTable {
    shape: f64,
    scale: f64,
    u_max: f64,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl SurvivalTable {
    fn build(shape: f64, scale: f64, u_max: f64) -> Self {
        const NODES: usize = 1 << 16;
        let step = u_max / (NODES - 1) as f64;
        let ln_norm = ln_gamma(shape) + shape * scale.ln();
        let mut values = Vec::with_capacity(NODES);
        let mut derivs = Vec::with_capacity(NODES);
        for i in 0..NODES {
            let u = i as f64 * step;
            values.push(if u == 0.0 { 1.0 } else { gamma_ur(shape, u / scale) });
            let pdf = if u == 0.0 {
                if shape > 1.0 {
                    0.0
                } else {
                    1.0 / scale // shape == 1.0 (exponential)
                }
            } else {
                ((shape - 1.0) * u.ln() - u / scale - ln_norm).exp()
            };
            derivs.push(-pdf);
        }
        SurvivalTable {
            shape,
            scale,
            u_max,
            step,
            values,
            derivs,
        }
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        if u >= self.u_max {
            return gamma_ur(self.shape, u / self.scale);
        }
        let s = u / self.step;
        let i = (s as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.values[i]
            + h10 * self.step * self.derivs[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.derivs[i + 1];
        v.clamp(0.0, 1.0)
    }
}
