//! Named experiments behind the CLI.
//!
//! Each command turns a validated [`RunConfig`] into a CSV table plus a
//! one-line summary. Commands are pure with respect to the filesystem;
//! the binary decides where the bytes go. Every random draw comes from a
//! substream keyed on the master seed and a per-command domain, so two
//! commands never share randomness and a rerun reproduces the bytes.

use rand::Rng;
use thiserror::Error;

use crate::config::RunConfig;
use crate::multihop::{Chain, ChainConfig, ChainError};
use crate::optics::{
    bs_different_port_probability, sample_bs_event, AnalyzerConfig, AnalyzerEvent, OpticsError,
    PortPattern,
};
use crate::protocol::{
    calibrate_rc, ensemble_pair_state, exact_diff_probability, frame_bits,
    receive_message_known_length, send_message, sorted::sorted_diagrams, sorted::SortedDiagrams,
    DecisionRule, EntanglementGroup, PhysicsMode, ProtocolError, ScgPool,
};
use crate::quantum::{BellKind, JointState, PhotonAllocator, QuantumError};
use crate::report::{Cell, ReportError, Table};
use crate::rng::{domains, SeedContext, StreamParty};
use crate::stats::{
    binomial_error_bound, hoeffding_error_bound, wilson_interval, ChannelReport, StatsError,
};

/// Both sources in every experiment emit this Bell state.
pub const SOURCE: BellKind = BellKind::PsiMinus;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Frame(#[from] crate::protocol::FrameError),
    #[error("no-signaling violated in physical mode: Bob-side gap {gap}")]
    NoSignalingViolated { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Matrix,
    HomSweep,
    Send,
    Nosignal,
    Sorted,
    Calibrate,
    Multihop,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Matrix => "matrix",
            Command::HomSweep => "hom-sweep",
            Command::Send => "send",
            Command::Nosignal => "nosignal",
            Command::Sorted => "sorted",
            Command::Calibrate => "calibrate",
            Command::Multihop => "multihop",
        }
    }

    pub fn default_out_name(self) -> String {
        format!("psba_{}.csv", self.name().replace('-', "_"))
    }
}

/// What a command hands back: stdout line plus the CSV table.
#[derive(Debug)]
pub struct CommandOutput {
    pub summary: String,
    pub table: Table,
}

pub fn run(command: Command, config: &RunConfig) -> Result<CommandOutput, CommandError> {
    match command {
        Command::Matrix => cmd_matrix(config),
        Command::HomSweep => cmd_hom_sweep(config),
        Command::Send => cmd_send(config),
        Command::Nosignal => cmd_nosignal(config),
        Command::Sorted => cmd_sorted(config),
        Command::Calibrate => cmd_calibrate(config),
        Command::Multihop => cmd_multihop(config),
    }
}

/// Nominal per-EG different-port rate for a BSM-encoded (1) symbol at
/// v = 1: one quarter, the Ψ⁻ weight of the swapped-Bell mixture.
pub const P_DIFF_BSM: f64 = 0.25;
/// Nominal rate for an SSM-encoded (0) symbol under the idealized
/// assumption: collapsed pairs arrive distinguishable, a fair coin.
pub const P_DIFF_SSM: f64 = 0.5;

/// The midpoint decision rule and block length at the nominal rates.
/// The quantum machinery reproduces the nominal rates to roundoff; the
/// rule itself uses the clean constants so thresholds land exactly.
fn paper_rule(p_target: f64) -> Result<(u32, DecisionRule), CommandError> {
    let ideal = AnalyzerConfig::non_polarizing_bs(1.0)?;
    let p1 = exact_diff_probability(SOURCE, true, &ideal, PhysicsMode::PaperIdealized)?;
    let p0 = exact_diff_probability(SOURCE, false, &ideal, PhysicsMode::PaperIdealized)?;
    debug_assert!((p1 - P_DIFF_BSM).abs() < 1e-12);
    debug_assert!((p0 - P_DIFF_SSM).abs() < 1e-12);
    Ok(calibrate_rc(p_target, P_DIFF_BSM, P_DIFF_SSM)?)
}

fn mode_name(mode: PhysicsMode) -> &'static str {
    match mode {
        PhysicsMode::PaperIdealized => "paper",
        PhysicsMode::Physical => "physical",
    }
}

/// Samples `n` single-EG analyzer events: fresh EG, Alice encodes, Bob
/// analyzes. Returns the different-port count.
fn sample_eg_case(
    n: u64,
    bit: bool,
    slot: u32,
    analyzer: &AnalyzerConfig,
    mode: PhysicsMode,
    seeds: SeedContext,
) -> Result<u64, CommandError> {
    let mut alloc = PhotonAllocator::new();
    let mut n_diff = 0u64;
    for i in 0..n {
        let mut eg = EntanglementGroup::fresh(i, SOURCE, &mut alloc);
        let mut alice = seeds.stream(StreamParty::Alice, i, slot);
        if bit {
            eg.encode_bsm(&mut alice)?;
        } else {
            eg.encode_ssm(&mut alice)?;
        }
        let mut bob = seeds.stream(StreamParty::Bob, i, slot);
        if eg.analyze(analyzer, mode, &mut bob)? == PortPattern::DifferentPorts {
            n_diff += 1;
        }
    }
    Ok(n_diff)
}

/// Samples `n` analyzer events straight off a fixed pair state.
fn sample_state_case(
    n: u64,
    state: &JointState,
    visibility: f64,
    slot: u32,
    seeds: SeedContext,
) -> Result<u64, CommandError> {
    let mut rng = seeds.stream(StreamParty::Harness, 0, slot);
    let mut n_diff = 0u64;
    for _ in 0..n {
        let event = sample_bs_event(state, visibility, &mut rng)?;
        if matches!(
            event,
            AnalyzerEvent::BeamSplitter {
                pattern: PortPattern::DifferentPorts
            }
        ) {
            n_diff += 1;
        }
    }
    Ok(n_diff)
}

/// The four-case proportions table: what Bob's beam splitter shows for a
/// swapped-Bell mixture, for collapsed pairs, with indistinguishability
/// switched off, and for an equal-polarization product.
fn cmd_matrix(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::MATRIX);
    let analyzer = AnalyzerConfig::non_polarizing_bs(config.visibility)?;
    let n = config.n_trials;
    let mut table = Table::new([
        "case",
        "visibility",
        "exact_p_diff",
        "sampled_p_diff",
        "n_samples",
        "n_diff",
        "n_same",
    ]);

    let mut push = |case: &str, v: f64, exact: f64, n_diff: u64| -> Result<f64, CommandError> {
        let sampled = n_diff as f64 / n as f64;
        table.push_row([
            Cell::from(case),
            Cell::from(v),
            Cell::from(exact),
            Cell::from(sampled),
            Cell::from(n),
            Cell::from(n_diff),
            Cell::from(n - n_diff),
        ])?;
        Ok(sampled)
    };

    let exact_bsm = exact_diff_probability(SOURCE, true, &analyzer, config.mode)?;
    let diff_bsm = sample_eg_case(n, true, 0, &analyzer, config.mode, seeds)?;
    let s_bsm = push("swapped_bell_mixture", config.visibility, exact_bsm, diff_bsm)?;

    let exact_ssm = exact_diff_probability(SOURCE, false, &analyzer, config.mode)?;
    let diff_ssm = sample_eg_case(n, false, 1, &analyzer, config.mode, seeds)?;
    let s_ssm = push("ssm_collapsed", config.visibility, exact_ssm, diff_ssm)?;

    // fully distinguishable photons: v forced to 0, state irrelevant
    let mixture = ensemble_pair_state(SOURCE, true);
    let exact_override = bs_different_port_probability(&mixture, 0.0)?;
    let diff_override = sample_state_case(n, &mixture, 0.0, 2, seeds)?;
    push("distinguishable_override", 0.0, exact_override, diff_override)?;

    // both photons H: the HOM-dip case at full visibility
    let equal = JointState::linear_polarized_pair(0.0, 0.0);
    let exact_equal = bs_different_port_probability(&equal, config.visibility)?;
    let diff_equal = sample_state_case(n, &equal, config.visibility, 3, seeds)?;
    let s_equal = push("equal_polarization", config.visibility, exact_equal, diff_equal)?;

    let summary = format!(
        "matrix ({} mode, v={}, n={}): swapped mixture diff {:.4} (exact {:.4}), \
         collapsed {:.4} (exact {:.4}), equal-polarization {:.4} (exact {:.4})",
        mode_name(config.mode),
        config.visibility,
        n,
        s_bsm,
        exact_bsm,
        s_ssm,
        exact_ssm,
        s_equal,
        exact_equal,
    );
    Ok(CommandOutput { summary, table })
}

/// P(different ports) against visibility for an equal-polarization pair:
/// the interference dip from 0.5 down to 0.
fn cmd_hom_sweep(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::HOM);
    let state = JointState::linear_polarized_pair(0.0, 0.0);
    let n = config.n_trials;
    let mut table = Table::new(["visibility", "exact_p_diff", "sampled_p_diff", "n_samples"]);
    for step in 0..=10u32 {
        let v = f64::from(step) / 10.0;
        let exact = bs_different_port_probability(&state, v)?;
        let n_diff = sample_state_case(n, &state, v, step, seeds)?;
        table.push_row([
            Cell::from(v),
            Cell::from(exact),
            Cell::from(n_diff as f64 / n as f64),
            Cell::from(n),
        ])?;
    }
    let summary = format!(
        "hom-sweep: 11 visibility points, {n} samples each; exact P(diff) falls 0.5 -> 0"
    );
    Ok(CommandOutput { summary, table })
}

/// One framed transmission: Alice encodes the configured message, Bob
/// decodes it knowing the payload length.
fn cmd_send(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::CHANNEL);
    let analyzer = AnalyzerConfig::non_polarizing_bs(config.visibility)?;
    let (_, rule) = paper_rule(config.p_target)?;
    let n_bits = 8 * (1 + config.message.len() as u64);
    let mut pool = ScgPool::provision(n_bits, config.r_c, SOURCE, seeds)?;

    let transcript = send_message(&config.message, &mut pool)?;
    let received = receive_message_known_length(
        &mut pool,
        &analyzer,
        &rule,
        config.mode,
        config.message.len() as u8,
    )?;

    let sent: Vec<bool> = transcript.frame_bits.clone();
    let decoded: Vec<bool> = received.decodes.iter().map(|d| d.bit).collect();
    let fractions: Vec<f64> = received.decodes.iter().map(|d| d.fraction).collect();
    let report = ChannelReport::new(&sent, &decoded, &fractions, u64::from(config.r_c))?;

    let mut table = Table::new([
        "bit_index",
        "sent_bit",
        "decoded_bit",
        "n_diff",
        "n_same",
        "fraction",
        "ci95_low",
        "ci95_high",
    ]);
    for (i, d) in received.decodes.iter().enumerate() {
        table.push_row([
            Cell::from(i as u64),
            Cell::from(u64::from(sent[i])),
            Cell::from(u64::from(d.bit)),
            Cell::from(u64::from(d.n_diff)),
            Cell::from(u64::from(d.n_same)),
            Cell::from(d.fraction),
            Cell::from(report.ci_95[i].0),
            Cell::from(report.ci_95[i].1),
        ])?;
    }

    let text = String::from_utf8_lossy(&received.bytes).into_owned();
    let summary = format!(
        "send ({} mode, r_c={}): decoded {:?} from {:?}; {} bits, BER {:.4}, MI {:.4} bits/use",
        mode_name(config.mode),
        config.r_c,
        text,
        String::from_utf8_lossy(&config.message),
        report.n_bits,
        report.ber,
        report.mutual_information,
    );
    Ok(CommandOutput { summary, table })
}

/// Bob-side statistics under encode(0) vs encode(1): exact state and
/// probability gaps plus a Monte-Carlo mutual-information estimate.
/// Errors out if physical mode shows an exact gap.
fn cmd_nosignal(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::NOSIGNAL);
    let analyzer = AnalyzerConfig::non_polarizing_bs(config.visibility)?;
    let (_, rule) = paper_rule(config.p_target)?;

    let rho0 = ensemble_pair_state(SOURCE, false);
    let rho1 = ensemble_pair_state(SOURCE, true);
    let state_gap = rho0.max_entrywise_distance(&rho1)?;
    let p_diff_0 = exact_diff_probability(SOURCE, false, &analyzer, config.mode)?;
    let p_diff_1 = exact_diff_probability(SOURCE, true, &analyzer, config.mode)?;
    let p_gap = (p_diff_1 - p_diff_0).abs();

    if config.mode == PhysicsMode::Physical {
        let gap = state_gap.max(p_gap);
        if gap >= 1e-12 {
            return Err(CommandError::NoSignalingViolated { gap });
        }
    }

    let n = config.n_trials;
    let mut pool = ScgPool::provision(n, config.r_c, SOURCE, seeds)?;
    let mut pattern = seeds.stream(StreamParty::Harness, 0, 0);
    let mut sent = Vec::with_capacity(n as usize);
    let mut decoded = Vec::with_capacity(n as usize);
    // encode and decode one SCG at a time so only one block of encoded
    // pair states is ever alive
    for _ in 0..n {
        let bit = pattern.gen_bool(0.5);
        pool.encode_bit(bit)?;
        let d = pool.decode_bit(&analyzer, &rule, config.mode)?;
        sent.push(bit);
        decoded.push(d.bit);
    }
    let mi = crate::stats::mutual_information_estimate(&sent, &decoded)?;
    let disagreement = sent
        .iter()
        .zip(&decoded)
        .filter(|(s, d)| s != d)
        .count() as f64
        / n as f64;
    let ones = decoded.iter().filter(|&&b| b).count() as f64 / n as f64;

    let mut table = Table::new(["metric", "value"]);
    for (metric, value) in [
        ("exact_state_gap", Cell::from(state_gap)),
        ("exact_p_diff_bit0", Cell::from(p_diff_0)),
        ("exact_p_diff_bit1", Cell::from(p_diff_1)),
        ("exact_p_diff_gap", Cell::from(p_gap)),
        ("mc_bits", Cell::from(n)),
        ("mc_mutual_information", Cell::from(mi)),
        ("mc_decoded_ones_fraction", Cell::from(ones)),
        ("mc_disagreement_with_sent", Cell::from(disagreement)),
    ] {
        table.push_row([Cell::from(metric), value])?;
    }

    let summary = format!(
        "nosignal ({} mode): exact P(diff) gap {:.3e}, state gap {:.3e}; MI {:.5} bits/use over {} bits",
        mode_name(config.mode),
        p_gap,
        state_gap,
        mi,
        n,
    );
    Ok(CommandOutput { summary, table })
}

fn sorted_rows(table: &mut Table, diagrams: &SortedDiagrams) -> Result<(), CommandError> {
    let all = diagrams
        .bsm_rows
        .iter()
        .chain(&diagrams.ssm_rows)
        .chain(std::iter::once(&diagrams.union_row));
    for row in all {
        table.push_row([
            Cell::from(row.subset.as_str()),
            Cell::from(row.count),
            Cell::from(row.e_hv),
            Cell::from(row.e_diag),
            Cell::from(row.e_mixed),
        ])?;
    }
    Ok(())
}

/// Victor's delayed-choice sorting: correlation tables of the outer pair
/// conditioned on his BSM outcome or his SSM outcome pair.
fn cmd_sorted(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::SORTED);
    let diagrams = sorted_diagrams(config.n_trials, SOURCE, seeds)?;
    let mut table = Table::new(["subset", "count", "e_hv", "e_diag", "e_mixed"]);
    sorted_rows(&mut table, &diagrams)?;

    let min_bsm = diagrams
        .bsm_rows
        .iter()
        .flat_map(|r| [r.e_hv.abs(), r.e_diag.abs()])
        .fold(f64::INFINITY, f64::min);
    let max_ssm_diag = diagrams
        .ssm_rows
        .iter()
        .map(|r| r.e_diag.abs())
        .fold(0.0, f64::max);
    let summary = format!(
        "sorted ({} trials): BSM-sorted min |E| {:.4} across both bases, \
         SSM-sorted max |E(diag)| {:.4}, unsorted E(hv) {:.4}",
        diagrams.n_trials,
        min_bsm,
        max_ssm_diag,
        diagrams.union_row.e_hv,
    );
    Ok(CommandOutput { summary, table })
}

/// Block-length calibration: the exact and Hoeffding error bounds at the
/// calibrated r_C, plus an empirical bit error rate over fresh SCGs.
fn cmd_calibrate(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed).domain(domains::CALIBRATE);
    let analyzer = AnalyzerConfig::non_polarizing_bs(config.visibility)?;
    let (r_c, rule) = paper_rule(config.p_target)?;
    // the physics-derived rates go into the report next to the nominal ones
    let ideal = AnalyzerConfig::non_polarizing_bs(1.0)?;
    let p1 = exact_diff_probability(SOURCE, true, &ideal, PhysicsMode::PaperIdealized)?;
    let p0 = exact_diff_probability(SOURCE, false, &ideal, PhysicsMode::PaperIdealized)?;

    let exact_bit1 = binomial_error_bound(u64::from(r_c), rule.threshold, P_DIFF_BSM)?;
    let exact_bit0 = binomial_error_bound(u64::from(r_c), rule.threshold, P_DIFF_SSM)?;
    let hoeffding = hoeffding_error_bound(u64::from(r_c), rule.threshold, P_DIFF_BSM)?;

    let n = config.n_trials;
    let mut pool = ScgPool::provision(n, r_c, SOURCE, seeds)?;
    let mut pattern = seeds.stream(StreamParty::Harness, 0, 0);
    let mut errors = 0u64;
    for _ in 0..n {
        let bit = pattern.gen_bool(0.5);
        pool.encode_bit(bit)?;
        let d = pool.decode_bit(&analyzer, &rule, config.mode)?;
        if d.bit != bit {
            errors += 1;
        }
    }
    let ber = errors as f64 / n as f64;
    let (ci_low, ci_high) = wilson_interval(errors, n, 0.95)?;

    let mut table = Table::new(["metric", "value"]);
    for (metric, value) in [
        ("p_target", Cell::from(config.p_target)),
        ("p_diff_bit1", Cell::from(p1)),
        ("p_diff_bit0", Cell::from(p0)),
        ("threshold", Cell::from(rule.threshold)),
        ("r_c", Cell::from(u64::from(r_c))),
        ("exact_error_bit1", Cell::from(exact_bit1)),
        ("exact_error_bit0", Cell::from(exact_bit0)),
        ("exact_error_max", Cell::from(exact_bit1.max(exact_bit0))),
        ("hoeffding_bound", Cell::from(hoeffding)),
        ("empirical_bits", Cell::from(n)),
        ("empirical_errors", Cell::from(errors)),
        ("empirical_ber", Cell::from(ber)),
        ("empirical_ber_ci95_low", Cell::from(ci_low)),
        ("empirical_ber_ci95_high", Cell::from(ci_high)),
    ] {
        table.push_row([Cell::from(metric), value])?;
    }

    let summary = format!(
        "calibrate (p_target={}): r_c={}, threshold {:.4}; exact per-bit error <= {:.3e}, \
         empirical BER {}/{} ({} mode)",
        config.p_target,
        r_c,
        rule.threshold,
        exact_bit1.max(exact_bit0),
        errors,
        n,
        mode_name(config.mode),
    );
    Ok(CommandOutput { summary, table })
}

/// Decode-and-forward repeater chain relaying the configured message's
/// frame bits, with the latency-versus-light-time comparison.
fn cmd_multihop(config: &RunConfig) -> Result<CommandOutput, CommandError> {
    let seeds = SeedContext::new(config.seed);
    let analyzer = AnalyzerConfig::non_polarizing_bs(config.visibility)?;
    let (_, rule) = paper_rule(config.p_target)?;
    let chain_config = ChainConfig {
        nodes: config.hops + 1,
        hop_delay_s: config.hop_delay_ms / 1000.0,
        hop_distance_lightseconds: config.hop_distance_lightseconds,
        mode: config.mode,
    };
    let bits = frame_bits(&config.message)?;
    let mut chain = Chain::provision(
        chain_config,
        bits.len() as u64,
        config.r_c,
        rule,
        analyzer,
        SOURCE,
        seeds,
    )?;

    let mut errors = 0u64;
    for &bit in &bits {
        let outcome = chain.relay_bit(bit)?;
        if outcome.delivered() != bit {
            errors += 1;
        }
    }
    let latency = chain.latency_report();
    let speedup = latency.speedup().unwrap_or(f64::INFINITY);

    let mut table = Table::new(["metric", "value"]);
    for (metric, value) in [
        ("hops", Cell::from(u64::from(latency.hops))),
        ("nodes", Cell::from(u64::from(config.hops + 1))),
        ("bits_relayed", Cell::from(bits.len() as u64)),
        ("end_to_end_errors", Cell::from(errors)),
        (
            "end_to_end_ber",
            Cell::from(errors as f64 / bits.len() as f64),
        ),
        ("psba_latency_s", Cell::from(latency.psba_latency_s)),
        ("light_time_s", Cell::from(latency.light_time_s)),
        ("claimed_speedup", Cell::from(speedup)),
    ] {
        table.push_row([Cell::from(metric), value])?;
    }

    let summary = format!(
        "multihop ({} mode): {} bits over {} hops, {} end-to-end errors; \
         chain latency {:.3e} s vs light {:.3e} s (ratio {:.3e})",
        mode_name(config.mode),
        bits.len(),
        latency.hops,
        errors,
        latency.psba_latency_s,
        latency.light_time_s,
        speedup,
    );
    Ok(CommandOutput { summary, table })
}
