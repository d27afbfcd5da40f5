//! Null-hypothesis rejection-rate study: seeded dataset generation over
//! counter-keyed substreams, per-replicate evaluation of the p-value grid,
//! rejection counting, and round-wise aggregation. Every reported number is
//! a pure function of the configuration, independent of worker count.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::approx::{FallbackReason, Format, SingularityPolicy};
use crate::error::{Error, Result};
use crate::expratio::{ExpRatioModel, PairedSample};
use crate::inference::{pvalue_suite, RowTag};
use crate::numeric::NumericKitConfig;

/// Which p-value of a cell is compared to the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sidedness {
    One,
    Two,
}

impl Sidedness {
    pub const ALL: [Sidedness; 2] = [Sidedness::One, Sidedness::Two];

    pub fn as_str(self) -> &'static str {
        match self {
            Sidedness::One => "one",
            Sidedness::Two => "two",
        }
    }
}

/// Simulation configuration. The report is a pure function of this value.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n: usize,
    pub reps_per_round: usize,
    pub rounds: usize,
    pub alpha: f64,
    pub psi0: f64,
    pub master_seed: u64,
    pub rows: Vec<RowTag>,
    pub formats: Vec<Format>,
    pub policy: SingularityPolicy,
    pub kit: NumericKitConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 10,
            reps_per_round: 10_000,
            rounds: 100,
            alpha: 0.05,
            psi0: 1.0,
            master_seed: 0,
            rows: RowTag::ALL.to_vec(),
            formats: Format::ALL.to_vec(),
            policy: SingularityPolicy::default(),
            kit: NumericKitConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::DegenerateData(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.reps_per_round == 0 {
            return Err(Error::DegenerateData(
                "reps_per_round must be at least 1".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::DegenerateData("rounds must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::DegenerateData(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.psi0 > 0.0) || !self.psi0.is_finite() {
            return Err(Error::DegenerateData(format!(
                "psi0 must be positive, got {}",
                self.psi0
            )));
        }
        if self.rows.is_empty() {
            return Err(Error::DegenerateData("row set must not be empty".into()));
        }
        if self.formats.is_empty() {
            return Err(Error::DegenerateData("format set must not be empty".into()));
        }
        self.policy.validate()?;
        self.kit.validate()?;
        Ok(())
    }

    fn cell_keys(&self) -> Vec<(RowTag, Format, Sidedness)> {
        let mut keys = Vec::new();
        for &row in &self.rows {
            for &format in &self.formats {
                for side in Sidedness::ALL {
                    keys.push((row, format, side));
                }
            }
        }
        keys
    }
}

/// splitmix64 finalizer; used to key the per-replicate substreams.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream cipher keyed by (master_seed, round, rep): identical inputs yield
/// identical draws regardless of execution order or thread count.
fn substream(master_seed: u64, round_index: u64, rep_index: u64) -> ChaCha8Rng {
    let mut state = mix64(master_seed);
    state = mix64(state ^ mix64(round_index.wrapping_add(0x517c_c1b7_2722_0a95)));
    state = mix64(state ^ mix64(rep_index.wrapping_add(0x6c62_272e_07bb_0142)));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits into [0, 1)
    (rng.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard-exponential draw by inverse CDF, x = −log(1 − u), u ∈ [0, 1).
fn draw_exponential(rng: &mut ChaCha8Rng) -> f64 {
    -(-uniform01(rng)).ln_1p()
}

/// Generate the null dataset of replicate (round_index, rep_index): n pairs
/// of standard-exponential draws from the keyed substream.
pub fn gen_dataset(master_seed: u64, round_index: u64, rep_index: u64, n: usize) -> PairedSample {
    let mut rng = substream(master_seed, round_index, rep_index);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (draw_exponential(&mut rng), draw_exponential(&mut rng)))
        .collect();
    PairedSample::new(pairs).expect("inverse-CDF draws produced an invalid sample")
}

/// Rejection decision: strictly below the level.
pub fn rejects(p_value: f64, alpha: f64) -> bool {
    p_value < alpha
}

/// Outcome of one replicate.
#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rejected: BTreeMap<(RowTag, Format, Sidedness), bool>,
    /// Cells that fell back for a reason other than the near-zero guard.
    pub fallback_cells: u64,
    /// Whether any root of this replicate hit the near-zero guard.
    pub near_zero_root: bool,
}

/// Evaluate the p-value grid on one dataset and compare to the level.
pub fn run_rep(
    sample: PairedSample,
    psi0: f64,
    rows: &[RowTag],
    formats: &[Format],
    alpha: f64,
    policy: &SingularityPolicy,
    kit: &NumericKitConfig,
) -> RepOutcome {
    let model = ExpRatioModel::new(sample);
    let grid = pvalue_suite(&model, psi0, policy, kit);
    let mut rejected = BTreeMap::new();
    let mut fallback_cells = 0u64;
    let mut near_zero_root = false;
    for (row, format, cell) in grid.iter() {
        match cell.reason {
            Some(FallbackReason::NearZeroRoot) => near_zero_root = true,
            Some(_) => fallback_cells += 1,
            None => {}
        }
        if rows.contains(&row) && formats.contains(&format) {
            rejected.insert(
                (row, format, Sidedness::One),
                rejects(cell.pair.one_sided, alpha),
            );
            rejected.insert(
                (row, format, Sidedness::Two),
                rejects(cell.pair.two_sided, alpha),
            );
        }
    }
    RepOutcome {
        rejected,
        fallback_cells,
        near_zero_root,
    }
}

/// Rejection percentages of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub round_index: usize,
    /// Rejection rate in percent per (row, format, sidedness).
    pub q_star: BTreeMap<(RowTag, Format, Sidedness), f64>,
    /// Replicates with at least one non-guard cell fallback.
    pub fallback_count: u64,
    pub singularity_count: u64,
}

/// Run one round of `reps_per_round` replicates.
pub fn run_round(config: &SimConfig, round_index: usize) -> RoundResult {
    let keys = config.cell_keys();
    let mut counts: BTreeMap<(RowTag, Format, Sidedness), u64> =
        keys.iter().map(|&k| (k, 0)).collect();
    let mut fallback_count = 0u64;
    let mut singularity_count = 0u64;
    for rep in 0..config.reps_per_round {
        let sample = gen_dataset(config.master_seed, round_index as u64, rep as u64, config.n);
        let outcome = run_rep(
            sample,
            config.psi0,
            &config.rows,
            &config.formats,
            config.alpha,
            &config.policy,
            &config.kit,
        );
        for (key, rejected) in outcome.rejected {
            if rejected {
                *counts.get_mut(&key).unwrap() += 1;
            }
        }
        if outcome.fallback_cells > 0 {
            fallback_count += 1;
        }
        if outcome.near_zero_root {
            singularity_count += 1;
        }
    }
    let reps = config.reps_per_round as f64;
    let q_star = counts
        .into_iter()
        .map(|(k, c)| (k, 100.0 * c as f64 / reps))
        .collect();
    RoundResult {
        round_index,
        q_star,
        fallback_count,
        singularity_count,
    }
}

/// Full study report.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub config: SimConfig,
    pub rounds: Vec<RoundResult>,
    /// Arithmetic mean of the per-round percentages.
    pub averages: BTreeMap<(RowTag, Format, Sidedness), f64>,
    /// Standard error of the mean across rounds.
    pub std_errors: BTreeMap<(RowTag, Format, Sidedness), f64>,
    pub fallback_total: u64,
    pub singularity_total: u64,
}

/// Run all rounds (concurrently when a rayon pool is available) and
/// aggregate. Per-round substreams are keyed by round index, so scheduling
/// cannot affect any reported number.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let rounds: Vec<RoundResult> = (0..config.rounds)
        .into_par_iter()
        .map(|i| run_round(config, i))
        .collect();

    let keys = config.cell_keys();
    let mut averages = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    let m = config.rounds as f64;
    for &key in &keys {
        let mean = rounds.iter().map(|r| r.q_star[&key]).sum::<f64>() / m;
        let se = if config.rounds > 1 {
            let var = rounds
                .iter()
                .map(|r| {
                    let d = r.q_star[&key] - mean;
                    d * d
                })
                .sum::<f64>()
                / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        averages.insert(key, mean);
        std_errors.insert(key, se);
    }
    let fallback_total = rounds.iter().map(|r| r.fallback_count).sum();
    let singularity_total = rounds.iter().map(|r| r.singularity_count).sum();
    Ok(SimReport {
        config: config.clone(),
        rounds,
        averages,
        std_errors,
        fallback_total,
        singularity_total,
    })
}

/// Decimal with six significant digits, plain notation.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let decimals = (5 - v.abs().log10().floor() as i64).clamp(0, 17) as usize;
    format!("{v:.decimals$}")
}

impl SimReport {
    /// Flat results CSV: header `kind,row,format,sidedness,round,value`;
    /// kinds are `round`, `average`, `stderr` and `diagnostics`. Summary
    /// kinds leave the round column empty; diagnostics (seed and counters)
    /// are printed as full integers.
    pub fn to_results_csv(&self) -> String {
        let mut out = String::from("kind,row,format,sidedness,round,value\n");
        let keys = self.config.cell_keys();
        for round in &self.rounds {
            for &(row, format, side) in &keys {
                out.push_str(&format!(
                    "round,{},{},{},{},{}\n",
                    row.as_str(),
                    format.as_str(),
                    side.as_str(),
                    round.round_index,
                    fmt_sig6(round.q_star[&(row, format, side)])
                ));
            }
        }
        for &(row, format, side) in &keys {
            out.push_str(&format!(
                "average,{},{},{},,{}\n",
                row.as_str(),
                format.as_str(),
                side.as_str(),
                fmt_sig6(self.averages[&(row, format, side)])
            ));
        }
        for &(row, format, side) in &keys {
            out.push_str(&format!(
                "stderr,{},{},{},,{}\n",
                row.as_str(),
                format.as_str(),
                side.as_str(),
                fmt_sig6(self.std_errors[&(row, format, side)])
            ));
        }
        out.push_str(&format!(
            "diagnostics,seed,,,,{}\n",
            self.config.master_seed
        ));
        out.push_str(&format!(
            "diagnostics,fallback_count,,,,{}\n",
            self.fallback_total
        ));
        out.push_str(&format!(
            "diagnostics,singularity_count,,,,{}\n",
            self.singularity_total
        ));
        out
    }
}
