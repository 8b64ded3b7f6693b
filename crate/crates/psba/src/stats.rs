//! Statistical machinery for the block decoder: exact binomial error
//! tails, the Hoeffding bound used for calibration, plug-in mutual
//! information of the binary channel, and Wilson confidence intervals for
//! reported fractions.

use statrs::function::erf::erf_inv;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("probability {0} outside (0, 1)")]
    BadProbability(f64),
    #[error("threshold {0} outside (0, 1)")]
    BadThreshold(f64),
    #[error("confidence {0} outside (0, 1)")]
    BadConfidence(f64),
    #[error("need at least one trial")]
    ZeroTrials,
    #[error("successes {k} exceed trials {n}")]
    SuccessesExceedTrials { k: u64, n: u64 },
    #[error("bit lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty bit list")]
    EmptyInput,
}

/// ln C(r, k) via log-gamma, stable for any block length.
fn ln_choose(r: u64, k: u64) -> f64 {
    ln_gamma(r as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((r - k) as f64 + 1.0)
}

/// Sums Binomial(r, p) probabilities over k in [lo, hi] by direct
/// summation in log space.
fn binomial_range_sum(r: u64, p: f64, lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let log_terms: Vec<f64> = (lo..=hi)
        .map(|k| ln_choose(r, k) + k as f64 * lp + (r - k) as f64 * lq)
        .collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = log_terms.iter().map(|&l| (l - max).exp()).sum();
    (max.exp() * sum).min(1.0)
}

/// Exact probability that a Binomial(r, p_true)/r fraction falls on the
/// wrong side of the decision threshold t, where "fraction ≥ t" decodes as
/// the high-probability symbol. For p_true < t this is P(fraction ≥ t);
/// otherwise P(fraction < t). A fraction exactly at t sides with ≥.
pub fn binomial_error_bound(r: u64, t: f64, p_true: f64) -> Result<f64, StatsError> {
    if r == 0 {
        return Err(StatsError::ZeroTrials);
    }
    if !(p_true > 0.0 && p_true < 1.0) {
        return Err(StatsError::BadProbability(p_true));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(StatsError::BadThreshold(t));
    }
    // smallest k with k/r ≥ t
    let k_at_t = (t * r as f64).ceil() as u64;
    let value = if p_true < t {
        binomial_range_sum(r, p_true, k_at_t.min(r + 1), r)
    } else {
        if k_at_t == 0 {
            return Ok(0.0);
        }
        binomial_range_sum(r, p_true, 0, k_at_t - 1)
    };
    Ok(value)
}

/// Hoeffding bound exp(−2 r (t − p)²) on the same error event.
pub fn hoeffding_error_bound(r: u64, t: f64, p_true: f64) -> Result<f64, StatsError> {
    if r == 0 {
        return Err(StatsError::ZeroTrials);
    }
    if !(p_true > 0.0 && p_true < 1.0) {
        return Err(StatsError::BadProbability(p_true));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(StatsError::BadThreshold(t));
    }
    Ok((-2.0 * r as f64 * (t - p_true).powi(2)).exp())
}

/// Plug-in mutual information of the empirical 2×2 joint distribution of
/// (sent, decoded), in bits per channel use. Zero-count cells contribute
/// zero. Clamped below at 0 against roundoff.
pub fn mutual_information_estimate(sent: &[bool], decoded: &[bool]) -> Result<f64, StatsError> {
    if sent.len() != decoded.len() {
        return Err(StatsError::LengthMismatch {
            left: sent.len(),
            right: decoded.len(),
        });
    }
    if sent.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut joint = [[0usize; 2]; 2];
    for (&s, &d) in sent.iter().zip(decoded) {
        joint[usize::from(s)][usize::from(d)] += 1;
    }
    let n = sent.len() as f64;
    let mut mi = 0.0;
    for s in 0..2 {
        for d in 0..2 {
            let c = joint[s][d];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / n;
            let px = (joint[s][0] + joint[s][1]) as f64 / n;
            let py = (joint[0][d] + joint[1][d]) as f64 / n;
            mi += pxy * (pxy / (px * py)).log2();
        }
    }
    Ok(mi.max(0.0))
}

/// Wilson score interval for k successes in n trials at the given two-sided
/// confidence level.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> Result<(f64, f64), StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroTrials);
    }
    if k > n {
        return Err(StatsError::SuccessesExceedTrials { k, n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::BadConfidence(confidence));
    }
    let z = std::f64::consts::SQRT_2 * erf_inv(confidence);
    let nf = n as f64;
    let p_hat = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p_hat + z2 / (2.0 * nf)) / denom;
    let half = (z / denom) * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Per-transmission summary of a simulated channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub n_bits: usize,
    pub ber: f64,
    pub mutual_information: f64,
    /// Observed different-port fraction per transmitted bit.
    pub fractions: Vec<f64>,
    /// 95% Wilson interval per fraction.
    pub ci_95: Vec<(f64, f64)>,
}

impl ChannelReport {
    /// Builds the report from matched sent/decoded bit lists and the
    /// per-bit observed fractions over `trials_per_bit` events each.
    pub fn new(
        sent: &[bool],
        decoded: &[bool],
        fractions: &[f64],
        trials_per_bit: u64,
    ) -> Result<Self, StatsError> {
        if sent.len() != decoded.len() {
            return Err(StatsError::LengthMismatch {
                left: sent.len(),
                right: decoded.len(),
            });
        }
        if sent.len() != fractions.len() {
            return Err(StatsError::LengthMismatch {
                left: sent.len(),
                right: fractions.len(),
            });
        }
        let mutual_information = mutual_information_estimate(sent, decoded)?;
        let errors = sent
            .iter()
            .zip(decoded)
            .filter(|(s, d)| s != d)
            .count();
        let ci_95 = fractions
            .iter()
            .map(|&f| {
                let k = (f * trials_per_bit as f64).round() as u64;
                wilson_interval(k.min(trials_per_bit), trials_per_bit, 0.95)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            n_bits: sent.len(),
            ber: errors as f64 / sent.len() as f64,
            mutual_information,
            fractions: fractions.to_vec(),
            ci_95,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Reference tail values computed independently by exact rational
    // summation of C(148,k) p^k (1-p)^(148-k), then rounded to f64.
    const TAIL_P25_R148: f64 = 0.00037379492122743645;
    const TAIL_P50_R148: f64 = 0.0011221828763748535;

    fn entropy_bits(p: f64) -> f64 {
        let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
        term(p) + term(1.0 - p)
    }

    #[test]
    fn single_trial_error_is_bernoulli() {
        assert_abs_diff_eq!(
            binomial_error_bound(1, 0.375, 0.25).unwrap(),
            0.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn calibrated_block_errors_match_reference_values() {
        let low = binomial_error_bound(148, 0.375, 0.25).unwrap();
        assert_abs_diff_eq!(low, TAIL_P25_R148, epsilon = TAIL_P25_R148 * 1e-10);
        let high = binomial_error_bound(148, 0.375, 0.5).unwrap();
        assert_abs_diff_eq!(high, TAIL_P50_R148, epsilon = TAIL_P50_R148 * 1e-10);
        // both sides beat the calibration target comfortably
        assert!(low < 0.01 && high < 0.01);
    }

    #[test]
    fn hoeffding_matches_closed_form_and_dominates_exact() {
        let h = hoeffding_error_bound(148, 0.375, 0.25).unwrap();
        assert_abs_diff_eq!(h, 0.009803655035821828, epsilon = 1e-15);
        assert!(binomial_error_bound(148, 0.375, 0.25).unwrap() <= h);
    }

    #[test]
    fn threshold_at_true_probability_gives_half() {
        // Bin(1001, 1/2) is symmetric about 500.5, so P(X ≤ 500) = 1/2
        let e = binomial_error_bound(1001, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn error_bound_validates_arguments() {
        assert_eq!(
            binomial_error_bound(0, 0.375, 0.25).unwrap_err(),
            StatsError::ZeroTrials
        );
        assert_eq!(
            binomial_error_bound(10, 0.375, 1.0).unwrap_err(),
            StatsError::BadProbability(1.0)
        );
        assert_eq!(
            hoeffding_error_bound(10, 1.5, 0.25).unwrap_err(),
            StatsError::BadThreshold(1.5)
        );
    }

    #[test]
    fn identity_channel_with_balanced_bits_carries_one_bit() {
        let sent: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let mi = mutual_information_estimate(&sent, &sent).unwrap();
        assert_abs_diff_eq!(mi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_decoder_carries_nothing() {
        let sent: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        let decoded = vec![true; 100];
        let mi = mutual_information_estimate(&sent, &decoded).unwrap();
        assert_abs_diff_eq!(mi, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mi_rejects_mismatched_inputs() {
        assert_eq!(
            mutual_information_estimate(&[true], &[true, false]).unwrap_err(),
            StatsError::LengthMismatch { left: 1, right: 2 }
        );
        assert_eq!(
            mutual_information_estimate(&[], &[]).unwrap_err(),
            StatsError::EmptyInput
        );
    }

    #[test]
    fn wilson_interval_matches_reference() {
        let (lo, hi) = wilson_interval(25, 100, 0.95).unwrap();
        // reference endpoints from the closed-form Wilson formula with
        // z = 1.959963984540054
        assert_abs_diff_eq!(lo, 0.17545211362287677, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.343044635480616, epsilon = 1e-6);
        assert!(lo < 0.25 && 0.25 < hi);
        assert!(hi - lo < 0.18);
    }

    #[test]
    fn wilson_interval_edges() {
        let (lo, _) = wilson_interval(0, 40, 0.95).unwrap();
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-12);
        let (_, hi) = wilson_interval(40, 40, 0.95).unwrap();
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
        assert_eq!(
            wilson_interval(5, 4, 0.95).unwrap_err(),
            StatsError::SuccessesExceedTrials { k: 5, n: 4 }
        );
    }

    #[test]
    fn channel_report_aggregates() {
        let sent = [true, false, true, false];
        let decoded = [true, false, false, false];
        let fractions = [0.25, 0.5, 0.45, 0.52];
        let report = ChannelReport::new(&sent, &decoded, &fractions, 148).unwrap();
        assert_eq!(report.n_bits, 4);
        assert_abs_diff_eq!(report.ber, 0.25, epsilon = 1e-15);
        assert!(report.mutual_information >= 0.0);
        for ((lo, hi), f) in report.ci_95.iter().zip(fractions) {
            assert!(lo <= &f && &f <= hi);
        }
    }

    proptest! {
        /// Exact tail never exceeds the Hoeffding bound: for p < t the
        /// error event is the upper tail at deviation t − p, otherwise the
        /// strict lower tail at deviation p − t, and Hoeffding covers both.
        #[test]
        fn exact_below_hoeffding(
            r in 1u64..400,
            t in 0.05f64..0.95,
            gap in -0.3f64..0.3,
        ) {
            let p = (t + gap).clamp(0.01, 0.99);
            let exact = binomial_error_bound(r, t, p).unwrap();
            let hoeffding = hoeffding_error_bound(r, t, p).unwrap();
            prop_assert!(exact <= hoeffding + 1e-12,
                "exact {exact} > hoeffding {hoeffding} at r={r} t={t} p={p}");
        }

        /// MI is within [0, min(H(sent), H(decoded))].
        #[test]
        fn mi_respects_entropy_bounds(bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let sent: Vec<bool> = bits.iter().map(|b| b.0).collect();
            let decoded: Vec<bool> = bits.iter().map(|b| b.1).collect();
            let mi = mutual_information_estimate(&sent, &decoded).unwrap();
            let n = sent.len() as f64;
            let hs = entropy_bits(sent.iter().filter(|&&b| b).count() as f64 / n);
            let hd = entropy_bits(decoded.iter().filter(|&&b| b).count() as f64 / n);
            prop_assert!(mi >= 0.0);
            prop_assert!(mi <= hs.min(hd) + 1e-9);
        }

        /// Wilson intervals contain the point estimate and sit inside [0,1].
        #[test]
        fn wilson_contains_estimate(k in 0u64..200, extra in 1u64..200, c in 0.5f64..0.999) {
            let n = k + extra;
            let (lo, hi) = wilson_interval(k, n, c).unwrap();
            let p_hat = k as f64 / n as f64;
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!((0.0..=1.0).contains(&hi));
            prop_assert!(lo <= p_hat + 1e-12 && p_hat <= hi + 1e-12);
        }
    }
}
