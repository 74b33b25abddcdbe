//! Geometry, channel gains, safe rate bounds and the Monte-Carlo ergodic
//! rate estimator that certifies them.
//!
//! Distances passed to the rate functions are Euclidean meters. UAV links are
//! line-of-sight with free-space loss `ρ0 / d²`; ground links from the ST see
//! `ρ0 d^{-φ} ψ` with `ψ ~ Exp(1)` (Rayleigh power fading).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scenario::Position3D;

/// The subset of the scenario the link-budget formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub rho0: f64,
    pub noise_power: f64,
    /// `ρ0 / σ²`, per watt.
    pub gamma0: f64,
    pub path_loss_exp: f64,
    pub euler_k: f64,
}

/// Per-slot rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub r_s: f64,
    pub r_e: f64,
    /// `max(0, r_s - r_e)`.
    pub secrecy: f64,
}

impl RatePair {
    pub fn new(r_s: f64, r_e: f64) -> Self {
        Self { r_s, r_e, secrecy: (r_s - r_e).max(0.0) }
    }

    pub fn unclipped(&self) -> f64 {
        self.r_s - self.r_e
    }
}

/// `f_d(a, b)`: squared Euclidean distance.
#[inline]
pub fn squared_distance(a: &Position3D, b: &Position3D) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn distance(a: &Position3D, b: &Position3D) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Free-space UAV link gain `ρ0 / dist²`.
pub fn uav_gain(rho0: f64, dist: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {dist}")));
    }
    Ok(rho0 / (dist * dist))
}

/// Jensen lower bound `R_S^LB` of the ergodic ST→SR rate under UAV jamming:
/// `log2(1 + e^{-k} γ0 d_ss^{-φ} p_s / (γ0 d_us^{-2} p_u + 1))`.
pub fn secrecy_lower_bound(p_s: f64, p_u: f64, d_ss: f64, d_us: f64, ch: &ChannelParams) -> f64 {
    let signal = (-ch.euler_k).exp() * ch.gamma0 * d_ss.powf(-ch.path_loss_exp) * p_s;
    let jam = ch.gamma0 * p_u / (d_us * d_us);
    (signal / (jam + 1.0)).ln_1p() / std::f64::consts::LN_2
}

/// Jensen upper bound `R_E^UB` of the ergodic ST→Eve rate:
/// `log2(1 + γ0 d_se^{-φ} p_s / (γ0 d_ue^{-2} p_u + 1))`.
pub fn eavesdropper_upper_bound(p_s: f64, p_u: f64, d_se: f64, d_ue: f64, ch: &ChannelParams) -> f64 {
    let signal = ch.gamma0 * d_se.powf(-ch.path_loss_exp) * p_s;
    let jam = ch.gamma0 * p_u / (d_ue * d_ue);
    (signal / (jam + 1.0)).ln_1p() / std::f64::consts::LN_2
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Online mean/variance accumulator (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n).sqrt(),
            samples: self.n as usize,
        }
    }
}

const MC_CHUNK: usize = 1 << 16;

/// Monte-Carlo estimate of `E[g(ψ)]`, `ψ ~ Exp(1)`.
///
/// Sample `j` of chunk `c` comes from ChaCha8 stream `c` of `seed`, so the
/// estimate depends only on `(seed, samples)`, never on thread count.
pub fn mc_exponential_mean<G>(samples: usize, seed: u64, exec: Execution, g: G) -> McEstimate
where
    G: Fn(f64) -> f64 + Sync + Send,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = par::map_indexed(exec, chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut m = Moments::default();
        for _ in 0..len {
            // inverse CDF; 1 - u lies in (0, 1]
            let u: f64 = rng.random();
            let psi = -(1.0 - u).ln();
            m.push(g(psi));
        }
        m
    });
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

/// Ergodic rate `E[log2(1 + p_s ρ0 d_tx^{-φ} ψ / (p_u ρ0 d_jam^{-2} + σ²))]`.
pub fn ergodic_rate_mc(
    p_s: f64,
    p_u: f64,
    d_tx: f64,
    d_jam: f64,
    samples: usize,
    seed: u64,
    ch: &ChannelParams,
) -> Result<McEstimate> {
    ergodic_rate_mc_with(p_s, p_u, d_tx, d_jam, samples, seed, ch, Execution::default())
}

#[allow(clippy::too_many_arguments)]
pub fn ergodic_rate_mc_with(
    p_s: f64,
    p_u: f64,
    d_tx: f64,
    d_jam: f64,
    samples: usize,
    seed: u64,
    ch: &ChannelParams,
    exec: Execution,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let snr_scale =
        p_s * ch.rho0 * d_tx.powf(-ch.path_loss_exp) / (p_u * ch.rho0 / (d_jam * d_jam) + ch.noise_power);
    if snr_scale == 0.0 {
        return Ok(McEstimate { mean: 0.0, std_error: 0.0, samples });
    }
    Ok(mc_exponential_mean(samples, seed, exec, |psi| {
        (snr_scale * psi).ln_1p() / std::f64::consts::LN_2
    }))
}

/// Average aggregate interference at the PR:
/// `(1/N) Σ (ρ0 d_sp^{-φ} p_s[n] + ρ0 d_up[n]^{-2} p_u[n])`.
pub fn interference_at_pr(
    p_s: &[f64],
    p_u: &[f64],
    d_sp: f64,
    d_up: &[f64],
    ch: &ChannelParams,
) -> Result<f64> {
    let n = p_s.len();
    for len in [p_u.len(), d_up.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no slots".into()));
    }
    let ground = ch.rho0 * d_sp.powf(-ch.path_loss_exp);
    let total: f64 = (0..n)
        .map(|i| ground * p_s[i] + ch.rho0 * p_u[i] / (d_up[i] * d_up[i]))
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_paper_scenario;
    use approx::assert_relative_eq;

    fn ch() -> ChannelParams {
        default_paper_scenario().channel()
    }

    #[test]
    fn squared_distance_examples() {
        let o = Position3D::new(0.0, 0.0, 0.0);
        assert_eq!(squared_distance(&o, &Position3D::new(3.0, 4.0, 0.0)), 25.0);
        assert_eq!(squared_distance(&o, &o), 0.0);
        assert_eq!(squared_distance(&o, &Position3D::new(150.0, 250.0, 0.0)), 85000.0);
    }

    #[test]
    fn uav_gain_examples() {
        assert_relative_eq!(uav_gain(10.0, 100.0).unwrap(), 1e-3);
        assert_eq!(uav_gain(10.0, 1.0).unwrap(), 10.0);
        assert_relative_eq!(uav_gain(10.0, 60.0).unwrap() / 4.0, uav_gain(10.0, 120.0).unwrap());
        assert!(uav_gain(10.0, 0.0).is_err());
        assert!(uav_gain(10.0, -3.0).is_err());
    }

    #[test]
    fn lower_bound_reference_values() {
        // mpmath, 40 digits
        assert_relative_eq!(
            secrecy_lower_bound(5.0, 0.0, 300.0, 100.0, &ch()),
            13.344_073_638_606_29,
            max_relative = 1e-12
        );
        assert_eq!(secrecy_lower_bound(0.0, 1e-3, 300.0, 100.0, &ch()), 0.0);
    }

    #[test]
    fn upper_bound_reference_values() {
        assert_relative_eq!(
            eavesdropper_upper_bound(5.0, 1.256e-3, 291.548, 100.0, &ch()),
            1.381_980_491_325_471_6,
            max_relative = 1e-12
        );
        assert!(eavesdropper_upper_bound(5.0, 1e12, 291.548, 100.0, &ch()) < 1e-9);
    }

    #[test]
    fn interference_examples() {
        let c = ch();
        let one = interference_at_pr(&[5.0], &[1.256e-3], 250.0, &[100.0], &c).unwrap();
        assert_relative_eq!(one, 4.456e-6, max_relative = 1e-12);
        let two =
            interference_at_pr(&[5.0, 5.0], &[1.256e-3, 1.256e-3], 250.0, &[100.0, 100.0], &c).unwrap();
        assert_relative_eq!(one, two, max_relative = 1e-14);
        assert_eq!(interference_at_pr(&[0.0], &[0.0], 250.0, &[100.0], &c).unwrap(), 0.0);
        assert!(matches!(
            interference_at_pr(&[1.0, 1.0], &[0.0], 250.0, &[1.0, 1.0], &c),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn mc_zero_power_is_zero() {
        for seed in [0, 1, 99] {
            let e = ergodic_rate_mc(0.0, 1e-3, 300.0, 100.0, 1000, seed, &ch()).unwrap();
            assert_eq!(e.mean, 0.0);
        }
    }

    #[test]
    fn mc_is_deterministic_and_thread_independent() {
        let c = ch();
        let a = ergodic_rate_mc_with(5.0, 1e-3, 300.0, 120.0, 200_000, 7, &c, Execution::Sequential).unwrap();
        let b = ergodic_rate_mc_with(5.0, 1e-3, 300.0, 120.0, 200_000, 7, &c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let d = ergodic_rate_mc_with(5.0, 1e-3, 300.0, 120.0, 200_000, 8, &c, Execution::Parallel).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn mc_standard_error_scales_with_sqrt_samples() {
        let c = ch();
        let a = ergodic_rate_mc(5.0, 1e-3, 300.0, 120.0, 200_000, 3, &c).unwrap();
        let b = ergodic_rate_mc(5.0, 1e-3, 300.0, 120.0, 400_000, 3, &c).unwrap();
        let ratio = b.std_error / a.std_error;
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn mc_log_snr_matches_closed_form() {
        // E[ln X] = -ln λ - k for X ~ Exp(rate λ)
        let c = ch();
        let (p_s, p_u, d_tx, d_jam) = (5.0_f64, 1.256e-3_f64, 300.0_f64, 150.0_f64);
        let mean_snr = p_s * c.rho0 * d_tx.powf(-c.path_loss_exp) / (p_u * c.rho0 / (d_jam * d_jam) + c.noise_power);
        let lambda = 1.0 / mean_snr;
        let est = mc_exponential_mean(1_000_000, 11, Execution::default(), |psi| (mean_snr * psi).ln());
        let exact = -lambda.ln() - c.euler_k;
        assert!((est.mean - exact).abs() <= 3.0 * est.std_error, "{} vs {}", est.mean, exact);
    }

    #[test]
    fn lower_bound_below_mc_and_upper_bound_above() {
        let c = ch();
        let (p_s, p_u) = (5.0, 1.256e-3);
        let lb = secrecy_lower_bound(p_s, p_u, 300.0, 180.0, &c);
        let rs = ergodic_rate_mc(p_s, p_u, 300.0, 180.0, 1_000_000, 1, &c).unwrap();
        assert!(lb <= rs.mean + 3.0 * rs.std_error);
        let ub = eavesdropper_upper_bound(p_s, p_u, 291.548, 100.0, &c);
        let re = ergodic_rate_mc(p_s, p_u, 291.548, 100.0, 1_000_000, 2, &c).unwrap();
        assert!(ub >= re.mean - 3.0 * re.std_error);
    }

    proptest::proptest! {
        #[test]
        fn squared_distance_is_metric_squared(
            a in proptest::array::uniform3(-500.0f64..500.0),
            b in proptest::array::uniform3(-500.0f64..500.0),
            c in proptest::array::uniform3(-500.0f64..500.0),
        ) {
            let (a, b, c) = (Position3D::from(a), Position3D::from(b), Position3D::from(c));
            proptest::prop_assert_eq!(squared_distance(&a, &b), squared_distance(&b, &a));
            proptest::prop_assert!(squared_distance(&a, &b) >= 0.0);
            let lhs = squared_distance(&a, &b);
            let rhs = 2.0 * (squared_distance(&a, &c) + squared_distance(&c, &b));
            proptest::prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn rate_bounds_are_monotone(
            p_s in 0.01f64..10.0,
            p_u in 1e-5f64..3e-3,
            d1 in 50.0f64..500.0,
            d2 in 50.0f64..500.0,
        ) {
            let c = ch();
            let h = 1e-4;
            let lb = secrecy_lower_bound(p_s, p_u, d1, d2, &c);
            proptest::prop_assert!(secrecy_lower_bound(p_s * (1.0 + h), p_u, d1, d2, &c) >= lb);
            proptest::prop_assert!(secrecy_lower_bound(p_s, p_u * (1.0 + h), d1, d2, &c) <= lb);
            let ub = eavesdropper_upper_bound(p_s, p_u, d1, d2, &c);
            proptest::prop_assert!(eavesdropper_upper_bound(p_s * (1.0 + h), p_u, d1, d2, &c) >= ub);
            proptest::prop_assert!(eavesdropper_upper_bound(p_s, p_u * (1.0 + h), d1, d2, &c) <= ub);
            proptest::prop_assert!(eavesdropper_upper_bound(p_s, p_u, d1 * (1.0 + h), d2, &c) <= ub);
            proptest::prop_assert!(lb.is_finite() && lb >= 0.0);
        }
    }
}
