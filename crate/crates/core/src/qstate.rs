//! Two-spin entangled state algebra.
//!
//! The state is `alpha |up_1 down_2> + beta |down_1 up_2>`. Bob measures
//! particle 1 in the basis `u = c|up> + d|down>`, `v = -conj(d)|up> +
//! conj(c)|down>`; Alice always measures particle 2 on the agreed axis and
//! records spin-down as her 1-bit. Every quantity is closed-form in
//! `(alpha, beta, c, d)`, so no matrix machinery is involved.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance applied to user-supplied amplitudes.
pub const INPUT_NORM_TOL: f64 = 1e-9;

/// Complex scalar over two `f64`s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Amplitude {
    pub re: f64,
    pub im: f64,
}

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude { re: 0.0, im: 0.0 };
    pub const ONE: Amplitude = Amplitude { re: 1.0, im: 0.0 };
    pub const I: Amplitude = Amplitude { re: 0.0, im: 1.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Self {
        let (s, c) = phase.sin_cos();
        Self::new(magnitude * c, magnitude * s)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for Amplitude {
    type Output = Amplitude;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Amplitude {
    type Output = Amplitude;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Amplitude {
    type Output = Amplitude;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for Amplitude {
    type Output = Amplitude;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

/// Checks `|x|^2 + |y|^2 = 1` within [`INPUT_NORM_TOL`] and rescales the pair
/// onto the unit sphere so derived identities hold to rounding error.
fn normalized_pair(what: &'static str, x: Amplitude, y: Amplitude) -> Result<(Amplitude, Amplitude)> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NotNormalized {
            what,
            deviation: f64::INFINITY,
        });
    }
    let norm = x.norm_sqr() + y.norm_sqr();
    let deviation = (norm - 1.0).abs();
    if deviation > INPUT_NORM_TOL {
        return Err(Error::NotNormalized { what, deviation });
    }
    let k = norm.sqrt().recip();
    Ok((x.scale(k), y.scale(k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangledState {
    alpha: Amplitude,
    beta: Amplitude,
}

impl EntangledState {
    pub fn new(alpha: Amplitude, beta: Amplitude) -> Result<Self> {
        let (alpha, beta) = normalized_pair("entangled state", alpha, beta)?;
        Ok(Self { alpha, beta })
    }

    /// Zero total spin: `alpha = -beta = 1/sqrt(2)`.
    pub fn singlet() -> Self {
        Self {
            alpha: Amplitude::real(FRAC_1_SQRT_2),
            beta: Amplitude::real(-FRAC_1_SQRT_2),
        }
    }

    /// Real amplitudes `alpha = sqrt(a2)`, `beta = -sqrt(1 - a2)`; `a2 = 1/2`
    /// is the singlet.
    pub fn from_alpha_sq(alpha_sq: f64) -> Result<Self> {
        crate::error::check_probability("|alpha|^2", alpha_sq)?;
        Self::new(
            Amplitude::real(alpha_sq.sqrt()),
            Amplitude::real(-(1.0 - alpha_sq).sqrt()),
        )
    }

    pub fn alpha(&self) -> Amplitude {
        self.alpha
    }

    pub fn beta(&self) -> Amplitude {
        self.beta
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

/// Validating constructor; see [`EntangledState::new`].
pub fn make_state(alpha: Amplitude, beta: Amplitude) -> Result<EntangledState> {
    EntangledState::new(alpha, beta)
}

/// Bob's rotated eigenbasis, parameterised by the spin-up vector `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBasis {
    c: Amplitude,
    d: Amplitude,
}

impl MeasurementBasis {
    pub fn new(c: Amplitude, d: Amplitude) -> Result<Self> {
        let (c, d) = normalized_pair("measurement basis", c, d)?;
        Ok(Self { c, d })
    }

    /// The agreed axis (z).
    pub const fn identity() -> Self {
        Self {
            c: Amplitude::ONE,
            d: Amplitude::ZERO,
        }
    }

    pub const fn axis_z() -> Self {
        Self::identity()
    }

    pub const fn axis_x() -> Self {
        Self {
            c: Amplitude::real(FRAC_1_SQRT_2),
            d: Amplitude::real(FRAC_1_SQRT_2),
        }
    }

    pub const fn axis_y() -> Self {
        Self {
            c: Amplitude::real(FRAC_1_SQRT_2),
            d: Amplitude::new(0.0, FRAC_1_SQRT_2),
        }
    }

    /// Real basis with `|c|^2 = c2`.
    pub fn from_c_sq(c_sq: f64) -> Result<Self> {
        crate::error::check_probability("|c|^2", c_sq)?;
        Self::new(Amplitude::real(c_sq.sqrt()), Amplitude::real((1.0 - c_sq).sqrt()))
    }

    pub fn c(&self) -> Amplitude {
        self.c
    }

    pub fn d(&self) -> Amplitude {
        self.d
    }

    /// The pair `(u, v)` as coefficient vectors over `{up, down}`.
    pub fn vectors(&self) -> ([Amplitude; 2], [Amplitude; 2]) {
        ([self.c, self.d], [-self.d.conj(), self.c.conj()])
    }

    /// Multiplies `(c, d)` by a common phase.
    pub fn with_phase(&self, phase: f64) -> Self {
        let z = Amplitude::from_polar(1.0, phase);
        Self {
            c: self.c * z,
            d: self.d * z,
        }
    }
}

/// Diagonal of `Tr_2 |psi><psi|` in the `{up_1, down_1}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedDensityMatrix {
    pub p_up: f64,
    pub p_down: f64,
}

pub fn reduced_density(state: &EntangledState) -> ReducedDensityMatrix {
    ReducedDensityMatrix {
        p_up: state.alpha_sq(),
        p_down: state.beta_sq(),
    }
}

/// Probability that Bob records a 1 (spin-up along `u`).
pub fn prob_one_bob(state: &EntangledState, basis: &MeasurementBasis) -> f64 {
    state.alpha_sq() * basis.c.norm_sqr() + state.beta_sq() * basis.d.norm_sqr()
}

/// Alice's 1-probability after Bob measures in `basis`, computed through
/// Bob's outcome and the conditional state it leaves particle 2 in.
pub fn prob_one_alice(state: &EntangledState, basis: &MeasurementBasis) -> f64 {
    let a = BranchAmplitudes::new(state, basis);
    let p_bob_one = prob_one_bob(state, basis);
    let p_bob_zero = 1.0 - p_bob_one;
    conditional(a.u_down.norm_sqr(), a.u_up.norm_sqr()) * p_bob_one
        + conditional(a.v_down.norm_sqr(), a.v_up.norm_sqr()) * p_bob_zero
}

fn conditional(hit: f64, miss: f64) -> f64 {
    let total = hit + miss;
    if total == 0.0 {
        0.0
    } else {
        hit / total
    }
}

/// The state rewritten in Bob's basis:
/// `|u> (beta conj(d) |up_2> + alpha conj(c) |down_2>) + |v> (beta c |up_2> - alpha d |down_2>)`.
struct BranchAmplitudes {
    u_up: Amplitude,
    u_down: Amplitude,
    v_up: Amplitude,
    v_down: Amplitude,
}

impl BranchAmplitudes {
    fn new(state: &EntangledState, basis: &MeasurementBasis) -> Self {
        let (alpha, beta, c, d) = (state.alpha, state.beta, basis.c, basis.d);
        Self {
            u_up: beta * d.conj(),
            u_down: alpha * c.conj(),
            v_up: beta * c,
            v_down: -(alpha * d),
        }
    }
}

/// Joint probabilities indexed `(Bob-bit, Alice-bit)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOutcomeDist {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl JointOutcomeDist {
    pub fn total(&self) -> f64 {
        self.p11 + self.p10 + self.p01 + self.p00
    }

    pub fn bob_marginal(&self) -> f64 {
        self.p11 + self.p10
    }

    pub fn alice_marginal(&self) -> f64 {
        self.p11 + self.p01
    }

    /// Draws one `(bob, alice)` outcome pair from a single uniform variate.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, bool) {
        let u: f64 = rng.gen();
        let t1 = self.p11;
        let t2 = t1 + self.p10;
        let t3 = t2 + self.p01;
        if u < t1 {
            (true, true)
        } else if u < t2 {
            (true, false)
        } else if u < t3 {
            (false, true)
        } else {
            (false, false)
        }
    }

    /// Counts of `[11, 10, 01, 00]` over `n` draws.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for _ in 0..n {
            let idx = match self.sample(rng) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            counts[idx] += 1;
        }
        counts
    }
}

pub fn joint_distribution(state: &EntangledState, basis: &MeasurementBasis) -> JointOutcomeDist {
    let a = BranchAmplitudes::new(state, basis);
    JointOutcomeDist {
        p11: a.u_down.norm_sqr(),
        p10: a.u_up.norm_sqr(),
        p01: a.v_down.norm_sqr(),
        p00: a.v_up.norm_sqr(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXACT: f64 = 1e-12;

    fn amp() -> impl Strategy<Value = Amplitude> {
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Amplitude::new(re, im))
    }

    fn unit_pair() -> impl Strategy<Value = (Amplitude, Amplitude)> {
        (amp(), amp())
            .prop_filter("nonzero", |(x, y)| x.norm_sqr() + y.norm_sqr() > 1e-6)
            .prop_map(|(x, y)| {
                let k = (x.norm_sqr() + y.norm_sqr()).sqrt().recip();
                (x.scale(k), y.scale(k))
            })
    }

    /// Independent route: build the 4-vector in the product basis
    /// `{up up, up down, down up, down down}` and trace out particle 2.
    fn partial_trace_oracle(state: &EntangledState) -> [[Amplitude; 2]; 2] {
        let psi = [Amplitude::ZERO, state.alpha(), state.beta(), Amplitude::ZERO];
        let mut rho = [[Amplitude::ZERO; 2]; 2];
        for (i, row) in rho.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    *cell = *cell + psi[2 * i + k] * psi[2 * j + k].conj();
                }
            }
        }
        rho
    }

    /// Independent route: project `|psi>` onto `|b> (x) |a>` for each outcome.
    fn projection_oracle(state: &EntangledState, basis: &MeasurementBasis) -> JointOutcomeDist {
        let psi = [Amplitude::ZERO, state.alpha(), state.beta(), Amplitude::ZERO];
        let (u, v) = basis.vectors();
        let up2 = [Amplitude::ONE, Amplitude::ZERO];
        let down2 = [Amplitude::ZERO, Amplitude::ONE];
        let prob = |b: [Amplitude; 2], a: [Amplitude; 2]| {
            let mut acc = Amplitude::ZERO;
            for i in 0..2 {
                for k in 0..2 {
                    acc = acc + (b[i] * a[k]).conj() * psi[2 * i + k];
                }
            }
            acc.norm_sqr()
        };
        JointOutcomeDist {
            p11: prob(u, down2),
            p10: prob(u, up2),
            p01: prob(v, down2),
            p00: prob(v, up2),
        }
    }

    #[test]
    fn singlet_and_product_states() {
        let s = make_state(Amplitude::real(FRAC_1_SQRT_2), Amplitude::real(-FRAC_1_SQRT_2)).unwrap();
        assert_eq!(s, EntangledState::singlet());
        let r = reduced_density(&s);
        assert!((r.p_up - 0.5).abs() < EXACT && (r.p_down - 0.5).abs() < EXACT);

        let p = make_state(Amplitude::ONE, Amplitude::ZERO).unwrap();
        assert_eq!(reduced_density(&p), ReducedDensityMatrix { p_up: 1.0, p_down: 0.0 });
    }

    #[test]
    fn complex_amplitudes_accepted() {
        let s = make_state(Amplitude::real(0.7f64.sqrt()), Amplitude::new(0.0, 0.3f64.sqrt())).unwrap();
        assert!((s.alpha_sq() - 0.7).abs() < EXACT);
        let r = reduced_density(&s);
        assert!((r.p_up - 0.7).abs() < EXACT && (r.p_down - 0.3).abs() < EXACT);
    }

    #[test]
    fn normalization_violation_reports_deviation() {
        match make_state(Amplitude::real(0.8), Amplitude::real(0.8)) {
            Err(Error::NotNormalized { deviation, .. }) => assert!((deviation - 0.28).abs() < 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(MeasurementBasis::new(Amplitude::real(f64::NAN), Amplitude::ZERO).is_err());
        assert!(EntangledState::from_alpha_sq(1.2).is_err());
    }

    #[test]
    fn worked_example_alpha07_c025() {
        let s = EntangledState::from_alpha_sq(0.7).unwrap();
        let b = MeasurementBasis::from_c_sq(0.25).unwrap();
        assert!((prob_one_bob(&s, &b) - 0.4).abs() < EXACT);
        assert!((prob_one_alice(&s, &b) - 0.7).abs() < EXACT);
        let j = joint_distribution(&s, &b);
        for (got, want) in [(j.p11, 0.175), (j.p10, 0.225), (j.p01, 0.525), (j.p00, 0.075)] {
            assert!((got - want).abs() < EXACT, "{got} vs {want}");
        }
    }

    #[test]
    fn worked_example_monte_carlo() {
        // frozen analytic values above, re-derived by sampling
        let j = joint_distribution(
            &EntangledState::from_alpha_sq(0.7).unwrap(),
            &MeasurementBasis::from_c_sq(0.25).unwrap(),
        );
        let n = 1_000_000u64;
        let counts = j.sample_counts(n, &mut ChaCha8Rng::seed_from_u64(11));
        for (count, p) in counts.iter().zip([0.175, 0.225, 0.525, 0.075]) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*count as f64 / n as f64 - p).abs() < 4.0 * sigma);
        }
        let bob = (counts[0] + counts[1]) as f64 / n as f64;
        let alice = (counts[0] + counts[2]) as f64 / n as f64;
        assert!((bob - 0.4).abs() < 4.0 * (0.24f64 / n as f64).sqrt());
        assert!((alice - 0.7).abs() < 4.0 * (0.21f64 / n as f64).sqrt());
    }

    #[test]
    fn identity_basis_gives_perfect_correlation() {
        let s = EntangledState::from_alpha_sq(0.3).unwrap();
        let j = joint_distribution(&s, &MeasurementBasis::identity());
        assert_eq!(j.p10, 0.0);
        assert_eq!(j.p01, 0.0);
        assert!((j.p11 - 0.3).abs() < EXACT);
        assert!((prob_one_bob(&s, &MeasurementBasis::identity()) - 0.3).abs() < EXACT);
    }

    #[test]
    fn alice_zero_when_alpha_zero() {
        let s = make_state(Amplitude::ZERO, Amplitude::ONE).unwrap();
        assert_eq!(prob_one_alice(&s, &MeasurementBasis::axis_x()), 0.0);
        assert_eq!(prob_one_alice(&s, &MeasurementBasis::identity()), 0.0);
    }

    #[test]
    fn singlet_is_unbiased_on_every_axis() {
        let s = EntangledState::singlet();
        for b in [MeasurementBasis::axis_x(), MeasurementBasis::axis_y(), MeasurementBasis::axis_z()] {
            assert!((prob_one_bob(&s, &b) - 0.5).abs() < EXACT);
            assert!((prob_one_alice(&s, &b) - 0.5).abs() < EXACT);
        }
    }

    proptest! {
        #[test]
        fn reduced_density_matches_partial_trace((a, b) in unit_pair()) {
            let s = make_state(a, b).unwrap();
            let rho = partial_trace_oracle(&s);
            let r = reduced_density(&s);
            prop_assert!((rho[0][0].re - r.p_up).abs() < EXACT);
            prop_assert!((rho[1][1].re - r.p_down).abs() < EXACT);
            prop_assert!(rho[0][1].abs() < EXACT && rho[1][0].abs() < EXACT);
            prop_assert!((r.p_up + r.p_down - 1.0).abs() < EXACT);
        }

        #[test]
        fn no_signaling_and_marginals((a, b) in unit_pair(), (c, d) in unit_pair()) {
            let s = make_state(a, b).unwrap();
            let m = MeasurementBasis::new(c, d).unwrap();
            let j = joint_distribution(&s, &m);
            prop_assert!((prob_one_alice(&s, &m) - s.alpha_sq()).abs() < EXACT);
            prop_assert!((j.total() - 1.0).abs() < EXACT);
            prop_assert!((j.bob_marginal() - prob_one_bob(&s, &m)).abs() < EXACT);
            prop_assert!((j.alice_marginal() - prob_one_alice(&s, &m)).abs() < EXACT);
            let o = projection_oracle(&s, &m);
            for (x, y) in [(j.p11, o.p11), (j.p10, o.p10), (j.p01, o.p01), (j.p00, o.p00)] {
                prop_assert!((x - y).abs() < EXACT);
            }
        }

        #[test]
        fn basis_phase_is_unobservable((a, b) in unit_pair(), (c, d) in unit_pair(), phase in 0.0f64..std::f64::consts::TAU) {
            let s = make_state(a, b).unwrap();
            let m = MeasurementBasis::new(c, d).unwrap();
            let j = joint_distribution(&s, &m);
            let k = joint_distribution(&s, &m.with_phase(phase));
            for (x, y) in [(j.p11, k.p11), (j.p10, k.p10), (j.p01, k.p01), (j.p00, k.p00)] {
                prop_assert!((x - y).abs() < EXACT);
            }
        }

        #[test]
        fn constructed_pairs_are_unit((a, b) in unit_pair()) {
            let m = MeasurementBasis::new(a, b).unwrap();
            prop_assert!((m.c().norm_sqr() + m.d().norm_sqr() - 1.0).abs() < EXACT);
            let (u, v) = m.vectors();
            let inner = u[0].conj() * v[0] + u[1].conj() * v[1];
            prop_assert!(inner.abs() < EXACT);
        }
    }
}
