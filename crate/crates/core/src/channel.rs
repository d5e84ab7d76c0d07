//! Binary asymmetric channel capacity.
//!
//! `p0 = P(out=1 | in=0)` and `p1 = P(out=0 | in=1)`. The closed form is
//! checked against [`capacity_bruteforce`], which maximises the mutual
//! information over the input prior directly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ait::binary_entropy;
use crate::error::check_probability;
use crate::{Error, Result};

/// Channels with `|p0 + p1 - 1|` below this are treated as the diagonal.
pub const DIAGONAL_TOL: f64 = 1e-9;

pub const MIN_RESOLUTION: usize = 1000;

const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p0: f64,
    pub p1: f64,
}

impl ChannelParams {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        Ok(Self {
            p0: check_probability("p0", p0)?,
            p1: check_probability("p1", p1)?,
        })
    }

    pub fn is_diagonal(&self) -> bool {
        (self.p0 + self.p1 - 1.0).abs() < DIAGONAL_TOL
    }

    /// `I(X; Y)` in bits when `P(X = 1) = q`.
    pub fn mutual_information(&self, q: f64) -> f64 {
        let out_one = (1.0 - q) * self.p0 + q * (1.0 - self.p1);
        binary_entropy(out_one) - (1.0 - q) * binary_entropy(self.p0) - q * binary_entropy(self.p1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    ClosedForm,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    /// Capacity-achieving probability of sending a 1.
    pub optimal_input_prior: f64,
    pub method: CapacityMethod,
}

/// `r(p0, p1) = (H(p0) - H(p1)) / (p0 + p1 - 1)`.
pub fn exponent_r(params: &ChannelParams) -> Result<f64> {
    if params.is_diagonal() {
        return Err(Error::DegenerateChannel {
            p0: params.p0,
            p1: params.p1,
        });
    }
    Ok((binary_entropy(params.p0) - binary_entropy(params.p1)) / (params.p0 + params.p1 - 1.0))
}

/// `log2(1 + 2^s) - p0 s - H(p0)` with `s = -r(p0, p1)`; exactly 0 on the
/// diagonal.
///
/// The exponent enters with the denominator `1 - p0 - p1`. Using `r` itself
/// in that position does not give the capacity (it exceeds one bit when
/// `p0 < p1`), which the brute-force oracle exposes immediately.
pub fn capacity_closed_form(params: &ChannelParams) -> CapacityResult {
    if params.is_diagonal() {
        return CapacityResult {
            capacity: 0.0,
            optimal_input_prior: 0.5,
            method: CapacityMethod::ClosedForm,
        };
    }
    let s = -exponent_r(params).expect("off-diagonal");
    let h0 = binary_entropy(params.p0);
    let capacity = (log2_one_plus_exp2(s) - params.p0 * s - h0).max(0.0);

    // stationarity: P(Y = 1) = 1 / (1 + 2^-s)
    let out_one = 1.0 / (1.0 + (-s).exp2());
    let q = ((out_one - params.p0) / (1.0 - params.p0 - params.p1)).clamp(0.0, 1.0);
    CapacityResult {
        capacity,
        optimal_input_prior: q,
        method: CapacityMethod::ClosedForm,
    }
}

/// `log2(1 + 2^s)` without overflow for large `|s|`.
fn log2_one_plus_exp2(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp2().ln_1p() / std::f64::consts::LN_2
    } else {
        s.exp2().ln_1p() / std::f64::consts::LN_2
    }
}

/// Grid search over `q in {0, 1/resolution, ..., 1}` followed by
/// golden-section refinement of the best cell to `1e-10` in `q`.
pub fn capacity_bruteforce(params: &ChannelParams, resolution: usize) -> Result<CapacityResult> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "brute-force resolution {resolution} below {MIN_RESOLUTION}"
        )));
    }
    let step = 1.0 / resolution as f64;
    let (best_i, _) = (0..=resolution)
        .map(|i| (i, params.mutual_information(i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let lo = (best_i as f64 - 1.0).max(0.0) * step;
    let hi = ((best_i as f64 + 1.0) * step).min(1.0);
    let q = golden_section_max(|q| params.mutual_information(q), lo, hi, GOLDEN_TOL);
    let grid_best = params.mutual_information(best_i as f64 * step);
    let refined = params.mutual_information(q);
    let (capacity, q) = if refined >= grid_best {
        (refined, q)
    } else {
        (grid_best, best_i as f64 * step)
    };
    Ok(CapacityResult {
        capacity: capacity.max(0.0),
        optimal_input_prior: q,
        method: CapacityMethod::BruteForce,
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Noise sources of the block-keyed protocol channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolNoiseInputs {
    /// Probability that a standard (unscrambled) block is p-compressible.
    pub p_n: f64,
    /// Probability the decoder calls a compressible block incompressible.
    pub p_omega: f64,
    /// Residual probability that a scrambled block decodes as 0.
    pub epsilon_1: f64,
}

/// `p0 = 1 - (1 - p_omega) p_n`, `p1 = epsilon_1`.
pub fn params_from_protocol(inputs: &ProtocolNoiseInputs) -> Result<ChannelParams> {
    let p_n = check_probability("p_N", inputs.p_n)?;
    let p_omega = check_probability("p_omega", inputs.p_omega)?;
    let eps = check_probability("epsilon_1", inputs.epsilon_1)?;
    ChannelParams::new(1.0 - (1.0 - p_omega) * p_n, eps)
}

/// Slope of `ln C` against `ln |delta|` for channels
/// `(p0_center, 1 - p0_center - delta)`.
pub fn near_diagonal_fit(p0_center: f64, deltas: &[f64]) -> Result<f64> {
    check_probability("p0_center", p0_center)?;
    if deltas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "near-diagonal fit needs at least 3 points, got {}",
            deltas.len()
        )));
    }
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if delta == 0.0 || delta.abs() > 0.05 || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta {delta} must satisfy 0 < |delta| <= 0.05"
            )));
        }
        let params = ChannelParams::new(p0_center, 1.0 - p0_center - delta)?;
        let c = capacity_closed_form(&params).capacity;
        if c <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "capacity vanished at delta {delta}; cannot take its logarithm"
            )));
        }
        points.push((delta.abs().ln(), c.ln()));
    }
    Ok(least_squares_slope(&points))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// One row of a capacity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p0: f64,
    pub p1: f64,
    pub capacity_closed: f64,
    pub capacity_brute: f64,
    pub abs_diff: f64,
    pub optimal_prior: f64,
}

pub fn sweep_point(params: ChannelParams, resolution: usize) -> Result<SweepRow> {
    let closed = capacity_closed_form(&params);
    let brute = capacity_bruteforce(&params, resolution)?;
    Ok(SweepRow {
        p0: params.p0,
        p1: params.p1,
        capacity_closed: closed.capacity,
        capacity_brute: brute.capacity,
        abs_diff: (closed.capacity - brute.capacity).abs(),
        optimal_prior: brute.optimal_input_prior,
    })
}

/// Full `grid x grid` sweep over `[0, 1]^2` (row-major in `p0`, then `p1`).
pub fn capacity_grid(grid: usize, resolution: usize) -> Result<Vec<SweepRow>> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution {grid} below 2")));
    }
    let step = 1.0 / (grid - 1) as f64;
    (0..grid * grid)
        .into_par_iter()
        .map(|cell| {
            let p0 = (cell / grid) as f64 * step;
            let p1 = (cell % grid) as f64 * step;
            sweep_point(ChannelParams::new(p0, p1)?, resolution)
        })
        .collect()
}
