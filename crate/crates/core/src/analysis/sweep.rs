use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{concurrence, state_fidelity};
use crate::model::{apply_noise, DensityMatrix, NoiseScope, NoiseSpec, QuantumState, Sign};
use crate::protocols::oracle::{project, two_spin_outcomes, BellState};
use crate::protocols::{
    derive_corrections, entanglement_swap_with, inject_channel, teleport_from, teleport_span, CorrectionRule,
    ProtocolContext, SwapResult, SWAP_MEASURED, SWAP_TABLE,
};
use crate::{Error, Result};

/// Default grid of relative exchange errors.
pub const DEFAULT_GRID: [f64; 7] = [0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub scope: NoiseScope,
    pub sign: Sign,
    pub delta_j: f64,
    pub avg_fidelity: f64,
    pub avg_concurrence: f64,
    /// Per swap outcome (swap, full) or per Bell channel (teleport).
    pub branch_labels: Vec<String>,
    pub branch_fidelity: Vec<f64>,
    pub branch_probability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scope: NoiseScope,
    pub theta: f64,
    /// Ordered by sign as given, then ascending `delta_j`.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, sign: Sign, delta_j: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.sign == sign && (p.delta_j - delta_j).abs() < 1e-12)
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Shared noise-free artefacts of one sweep.
struct Reference {
    swap: SwapResult,
    /// Principal eigenvector of each noise-free swap branch on dots (1, 4).
    swap_targets: Vec<QuantumState>,
    rules: Vec<(BellState, CorrectionRule)>,
}

/// Charge-noise sweep: schedules are compiled once for the noise-free
/// device and evolved on `J -> J (1 +/- delta_j)` during the stage selected
/// by `scope`, without recalibration.
///
/// * `swap`: fidelity of each swap branch on dots (1, 4) against the
///   noise-free branch state, and its concurrence.
/// * `teleport`: an ideal Bell channel on (1, 4) is injected where the swap
///   ends; fidelity of the corrected dot-1 state, averaged over the four
///   outcomes and then over the four channels. Concurrence is that of the
///   injected channel.
/// * `full`: noise throughout; each noisy swap branch serves as the channel
///   for a teleportation corrected for the Bell state it heralds. Fidelity
///   is averaged over the teleport outcomes, then over the swap branches;
///   concurrence is the mean over the noisy swap branches.
///
/// Averages are unweighted means over branches.
pub fn noise_sweep(
    ctx: &ProtocolContext,
    scope: NoiseScope,
    grid: &[f64],
    signs: &[Sign],
    theta: f64,
) -> Result<SweepResult> {
    if grid.is_empty() || signs.is_empty() {
        return Err(Error::Invalid("noise sweep grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut jobs = Vec::new();
    for &sign in signs {
        for &dj in &grid {
            jobs.push(NoiseSpec::new(dj, sign, scope)?);
        }
    }

    let swap = entanglement_swap_with(ctx, &ctx.profile)?;
    let swap_targets = swap
        .branches
        .iter()
        .map(|b| b.reduced.as_ref().expect("swap branches carry reduced states").principal_state())
        .collect();
    let rules = BellState::ALL
        .iter()
        .map(|&c| Ok((c, derive_corrections(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let reference = Reference { swap, swap_targets, rules };

    let points = jobs
        .par_iter()
        .map(|spec| sweep_point(ctx, &reference, spec, theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { scope, theta, points })
}

fn sweep_point(ctx: &ProtocolContext, reference: &Reference, spec: &NoiseSpec, theta: f64) -> Result<SweepPoint> {
    let noisy = apply_noise(&ctx.profile, spec)?;
    let mut point = SweepPoint {
        scope: spec.scope,
        sign: spec.sign,
        delta_j: spec.delta_j,
        avg_fidelity: 0.0,
        avg_concurrence: 0.0,
        branch_labels: Vec::new(),
        branch_fidelity: Vec::new(),
        branch_probability: Vec::new(),
    };
    match spec.scope {
        NoiseScope::Swap => {
            let run = entanglement_swap_with(ctx, &noisy)?;
            let mut conc = Vec::new();
            for (b, target) in run.branches.iter().zip(&reference.swap_targets) {
                let rho = b.reduced.as_ref().expect("swap branches carry reduced states");
                point.branch_labels.push(b.outcome.clone());
                point.branch_fidelity.push(state_fidelity(rho, target)?);
                point.branch_probability.push(b.probability);
                conc.push(b.concurrence.expect("swap branches carry concurrence"));
            }
            point.avg_concurrence = mean(conc);
        }
        NoiseScope::Teleport => {
            let span = &teleport_span(
                ctx,
                reference.swap.schedule.end(),
                reference.swap.schedule.final_phases(),
                theta,
            )?;
            let mut conc = Vec::new();
            for (channel, rule) in &reference.rules {
                let lab = inject_channel(ctx, *channel, span)?;
                let branches = teleport_from(ctx, &noisy, &lab, span, theta, rule)?;
                point.branch_labels.push(channel.name().to_string());
                point.branch_fidelity.push(mean(branches.iter().map(|b| b.fidelity)));
                point.branch_probability.push(branches.iter().map(|b| b.probability).sum());
                conc.push(concurrence(&DensityMatrix::from_pure(&channel.state()))?);
            }
            point.avg_concurrence = mean(conc);
        }
        NoiseScope::Full => {
            let run = entanglement_swap_with(ctx, &noisy)?;
            let span = &teleport_span(ctx, run.schedule.end(), run.schedule.final_phases(), theta)?;
            let mut conc = Vec::new();
            for ((outcome, (label, channel)), b) in two_spin_outcomes().iter().zip(SWAP_TABLE).zip(&run.branches) {
                let lab = match project(&run.lab_state, &SWAP_MEASURED, outcome)? {
                    (_, Some(s)) => s,
                    _ => return Err(Error::State(format!("swap outcome {label} has zero probability"))),
                };
                let rule = &reference.rules.iter().find(|(c, _)| *c == channel).expect("one rule per channel").1;
                let branches = teleport_from(ctx, &noisy, &lab, span, theta, rule)?;
                point.branch_labels.push(label.to_string());
                point.branch_fidelity.push(mean(branches.iter().map(|t| t.fidelity)));
                point.branch_probability.push(b.probability);
                conc.push(b.concurrence.expect("swap branches carry concurrence"));
            }
            point.avg_concurrence = mean(conc);
        }
    }
    point.avg_fidelity = mean(point.branch_fidelity.iter().copied());
    Ok(point)
}
