//! Checks method variants against the brute-force oracle by comparing full
//! neighbor lists.

use std::fmt;

use raypair_core::{Kernel, Method, Split};

use crate::bench::{BenchConfig, Distribution, Variant};
use crate::run::Runner;
use crate::Result;

/// The first target whose neighbor list differs from the oracle's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub variant: Variant,
    pub distribution: Distribution,
    pub param: u32,
    pub p: u32,
    pub seed: u64,
    pub target: usize,
    pub expected: Vec<u32>,
    pub got: Vec<u32>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let missing: Vec<u32> = self.expected.iter().filter(|s| !self.got.contains(s)).copied().collect();
        let extra: Vec<u32> = self.got.iter().filter(|s| !self.expected.contains(s)).copied().collect();
        write!(
            f,
            "{} on {} param={} p={} seed={}: target {} has {} neighbors, oracle has {} (missing {:?}, extra {:?})",
            self.variant,
            self.distribution,
            self.param,
            self.p,
            self.seed,
            self.target,
            self.got.len(),
            self.expected.len(),
            missing,
            extra,
        )
    }
}

/// Oracle neighbor lists for `config`. Fails past the oracle's size cap.
pub fn oracle_lists(runner: &Runner, config: &BenchConfig) -> Result<Vec<Vec<u32>>> {
    let r = runner.run(Method::Oracle, &config.spec, Kernel::Record)?;
    Ok(r.accumulators.lists().expect("record kernel keeps lists").to_vec())
}

/// Compares one variant with precomputed oracle lists.
pub fn verify_against(
    runner: &Runner,
    config: &BenchConfig,
    variant: Variant,
    split: Split,
    expected: &[Vec<u32>],
) -> Result<Option<Mismatch>> {
    let r = runner.run(variant.method, &config.spec_for(variant, split), Kernel::Record)?;
    let got = r.accumulators.lists().expect("record kernel keeps lists");
    Ok(expected
        .iter()
        .zip(got)
        .position(|(e, g)| e != g)
        .map(|target| Mismatch {
            variant,
            distribution: config.distribution,
            param: config.param,
            p: config.p,
            seed: config.seed,
            target,
            expected: expected[target].clone(),
            got: got[target].clone(),
        }))
}

pub fn verify(runner: &Runner, config: &BenchConfig, variant: Variant, split: Split) -> Result<Option<Mismatch>> {
    let expected = oracle_lists(runner, config)?;
    verify_against(runner, config, variant, split, &expected)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteReport {
    /// (config, variant) runs that matched before the first mismatch.
    pub passed: usize,
    pub first_mismatch: Option<Mismatch>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Runs every variant on every config and stops at the first mismatch.
pub fn verify_suite(runner: &Runner, configs: &[BenchConfig], variants: &[Variant], split: Split) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for config in configs {
        let expected = oracle_lists(runner, config)?;
        for &variant in variants {
            if let Some(m) = verify_against(runner, config, variant, split, &expected)? {
                report.first_mismatch = Some(m);
                return Ok(report);
            }
            report.passed += 1;
        }
    }
    Ok(report)
}

/// Small uniform and surface configs that run in well under a second each.
pub fn small_matrix(seed: u64) -> Result<Vec<BenchConfig>> {
    let mut out = Vec::new();
    for beta in [2, 4] {
        for p in [1, 2, 4] {
            out.push(BenchConfig::generate(Distribution::Uniform, beta, p, seed)?);
        }
    }
    for p in [1, 2] {
        out.push(BenchConfig::generate(Distribution::Surface, 8, p, seed)?);
    }
    Ok(out)
}
