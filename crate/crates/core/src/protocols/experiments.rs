use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::corrections::{derive_corrections, CorrectionRule, Pauli, PARTNER, RECEIVER, SENDER};
use super::oracle::{embed, outcome_label, project, ry_state, two_spin_outcomes, BellState};
use super::{bell_measurement, bell_prep_circuit, CorrectionMode, ProtocolContext, SWAP_MEASURED, SWAP_PAIR, SWAP_TABLE};
use crate::analysis::{concurrence, partial_trace_state, state_fidelity};
use crate::compiler::{GateSpec, ScheduleBuilder};
use crate::engine::{evolve, frame_unwind, frame_wind, HamiltonianModel};
use crate::model::{DensityMatrix, DeviceProfile, QuantumState, Schedule};
use crate::{Error, Result};

/// One measurement outcome.
#[derive(Debug, Clone)]
pub struct BranchResult {
    /// Measured spins in ascending dot order, e.g. `"du"`.
    pub outcome: String,
    pub probability: f64,
    /// Renormalized post-measurement state in the logical frame.
    pub state: QuantumState,
    pub reduced: Option<DensityMatrix>,
    pub fidelity: Option<f64>,
    pub concurrence: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BellPrepResult {
    pub schedule: Schedule,
    /// Logical-frame output.
    pub state: QuantumState,
    /// Reduced state of dots 1 to 4.
    pub reduced: DensityMatrix,
    /// Against Phi+ (1,2) x Phi+ (3,4) x |down>.
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct SwapResult {
    /// Bell preparation followed by the Bell-measurement basis change.
    pub schedule: Schedule,
    /// Pre-measurement lab-frame state at `schedule.end()`.
    pub lab_state: QuantumState,
    /// Branches over dots (2, 3), reduced to dots (1, 4) and scored against
    /// the Bell state each outcome should herald.
    pub branches: Vec<BranchResult>,
}

impl SwapResult {
    pub fn duration(&self) -> f64 {
        self.schedule.total_duration()
    }

    pub fn branch(&self, outcome: &str) -> Result<&BranchResult> {
        self.branches
            .iter()
            .find(|b| b.outcome == outcome)
            .ok_or_else(|| Error::Invalid(format!("no branch `{outcome}`")))
    }
}

#[derive(Debug, Clone)]
pub struct TeleportBranch {
    /// Spins of dots (4, 5).
    pub outcome: String,
    pub probability: f64,
    /// Dot-1 state before correction.
    pub reduced: DensityMatrix,
    pub correction: Pauli,
    pub corrected: DensityMatrix,
    pub p_down: f64,
    pub p_up: f64,
    /// Corrected state against `cos(theta/2)|down> + sin(theta/2)|up>`.
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct TeleportResult {
    pub theta: f64,
    pub swap: SwapResult,
    /// Teleportation span, starting where the swap ends.
    pub schedule: Schedule,
    pub rule: CorrectionRule,
    pub branches: Vec<TeleportBranch>,
}

impl TeleportResult {
    pub fn swap_duration(&self) -> f64 {
        self.swap.duration()
    }

    pub fn teleport_duration(&self) -> f64 {
        self.schedule.total_duration()
    }

    pub fn total_duration(&self) -> f64 {
        self.schedule.end()
    }

    pub fn min_fidelity(&self) -> f64 {
        self.branches.iter().map(|b| b.fidelity).fold(1.0, f64::min)
    }
}

fn run(ctx: &ProtocolContext, evo: &DeviceProfile, state: &QuantumState, schedule: &Schedule) -> Result<QuantumState> {
    evolve(state, schedule, &HamiltonianModel::new(evo, ctx.frame), &ctx.integrator)
}

fn logical(profile: &DeviceProfile, lab: &QuantumState, schedule: &Schedule) -> Result<QuantumState> {
    frame_unwind(lab, schedule.end(), profile, &schedule.final_phases())
}

pub fn bell_prep(ctx: &ProtocolContext) -> Result<BellPrepResult> {
    let mut b = ScheduleBuilder::new(&ctx.calibration);
    b.push_circuit(&bell_prep_circuit())?;
    let schedule = b.finish();
    let lab = run(ctx, &ctx.profile, &QuantumState::ground(5), &schedule)?;
    let state = logical(&ctx.profile, &lab, &schedule)?;
    let phi = BellState::PhiPlus.state();
    let target = embed(5, &[(&[0, 1], &phi), (&[2, 3], &phi)])?;
    Ok(BellPrepResult {
        fidelity: state.overlap(&target),
        reduced: partial_trace_state(&state, &[0, 1, 2, 3])?,
        state,
        schedule,
    })
}

/// Compiles Bell preparation plus the (2, 3) Bell-measurement basis change.
fn swap_schedule(ctx: &ProtocolContext) -> Result<Schedule> {
    let mut b = ScheduleBuilder::new(&ctx.calibration);
    b.push_circuit(&bell_prep_circuit().extend(&bell_measurement(SWAP_MEASURED[0])))?;
    Ok(b.finish())
}

fn projected(state: &QuantumState, dots: &[usize], outcome: &[bool]) -> Result<(f64, QuantumState)> {
    match project(state, dots, outcome)? {
        (p, Some(s)) => Ok((p, s)),
        _ => Err(Error::State(format!("outcome {} has zero probability", outcome_label(outcome)))),
    }
}

pub fn entanglement_swap(ctx: &ProtocolContext) -> Result<SwapResult> {
    entanglement_swap_with(ctx, &ctx.profile)
}

/// Entanglement swap evolved on `evo` (for example a noisy copy of the
/// compiled-for profile).
pub fn entanglement_swap_with(ctx: &ProtocolContext, evo: &DeviceProfile) -> Result<SwapResult> {
    let schedule = swap_schedule(ctx)?;
    let lab_state = run(ctx, evo, &QuantumState::ground(5), &schedule)?;
    let state = logical(evo, &lab_state, &schedule)?;
    let mut branches = Vec::with_capacity(4);
    for (outcome, (label, bell)) in two_spin_outcomes().iter().zip(SWAP_TABLE) {
        let (p, post) = projected(&state, &SWAP_MEASURED, outcome)?;
        let rho = partial_trace_state(&post, &SWAP_PAIR)?;
        branches.push(BranchResult {
            outcome: label.to_string(),
            probability: p,
            fidelity: Some(state_fidelity(&rho, &bell.state())?),
            concurrence: Some(concurrence(&rho)?),
            reduced: Some(rho),
            state: post,
        });
    }
    Ok(SwapResult {
        schedule,
        lab_state,
        branches,
    })
}

/// Compiles the teleportation span: `R_Y(theta)` on dot 5, then the (4, 5)
/// Bell-measurement basis change, continuing at `start` with frame `phases`.
pub fn teleport_span(ctx: &ProtocolContext, start: f64, phases: Vec<f64>, theta: f64) -> Result<Schedule> {
    let mut b = ScheduleBuilder::continuing(&ctx.calibration, start, phases);
    b.push_group(&[GateSpec::Ry { dot: SENDER, angle: theta }])?;
    b.push_circuit(&bell_measurement(PARTNER))?;
    Ok(b.finish())
}

/// Logical state with `channel` on dots (1, 4), everything else `|down>`,
/// wound into the lab frame at the start of `span`.
pub fn inject_channel(ctx: &ProtocolContext, channel: BellState, span: &Schedule) -> Result<QuantumState> {
    let logical = embed(5, &[(&[RECEIVER, PARTNER], &channel.state())])?;
    frame_wind(&logical, span.start(), &ctx.profile, span.initial_phases())
}

/// Runs `span` from the lab-frame state `lab` on `evo`, enumerates the
/// (4, 5) outcomes and corrects dot 1 with `rule`.
pub fn teleport_from(
    ctx: &ProtocolContext,
    evo: &DeviceProfile,
    lab: &QuantumState,
    span: &Schedule,
    theta: f64,
    rule: &CorrectionRule,
) -> Result<Vec<TeleportBranch>> {
    let out = run(ctx, evo, lab, span)?;
    let target = ry_state(theta);
    let measured = [PARTNER, SENDER];
    let mut branches = Vec::with_capacity(4);
    for outcome in two_spin_outcomes() {
        let label = outcome_label(&outcome);
        let correction = rule.get(&label)?;
        let (p, post_lab) = projected(&out, &measured, &outcome)?;
        let reduced = partial_trace_state(&logical(evo, &post_lab, span)?, &[RECEIVER])?;
        let corrected = match ctx.corrections {
            CorrectionMode::PostProcess => correction.apply(&reduced),
            CorrectionMode::Pulses => {
                let mut b = ScheduleBuilder::continuing(&ctx.calibration, span.end(), span.final_phases());
                for g in correction.gates(RECEIVER) {
                    b.push_group(&[g])?;
                }
                let fix = b.finish();
                let fixed = run(ctx, evo, &post_lab, &fix)?;
                partial_trace_state(&logical(evo, &fixed, &fix)?, &[RECEIVER])?
            }
        };
        let (p_down, p_up) = (corrected.get(0, 0).re, corrected.get(1, 1).re);
        branches.push(TeleportBranch {
            outcome: label,
            probability: p,
            fidelity: state_fidelity(&corrected, &target)?,
            reduced,
            correction,
            corrected,
            p_down,
            p_up,
        });
    }
    Ok(branches)
}

pub fn teleport(ctx: &ProtocolContext, theta: f64) -> Result<TeleportResult> {
    teleport_with(ctx, theta, &ctx.profile, &ctx.profile)
}

/// Teleportation of `R_Y(theta)|down>` from dot 5 to dot 1 over the swap
/// branch heralding Phi+ (outcome `dd`), with the swap evolved on
/// `swap_profile` and the teleportation span on `teleport_profile`.
pub fn teleport_with(
    ctx: &ProtocolContext,
    theta: f64,
    swap_profile: &DeviceProfile,
    teleport_profile: &DeviceProfile,
) -> Result<TeleportResult> {
    if !theta.is_finite() {
        return Err(Error::Invalid("theta must be finite".into()));
    }
    let swap = entanglement_swap_with(ctx, swap_profile)?;
    let (_, channel) = projected(&swap.lab_state, &SWAP_MEASURED, &[false, false])?;
    let schedule = teleport_span(ctx, swap.schedule.end(), swap.schedule.final_phases(), theta)?;
    let rule = derive_corrections(BellState::PhiPlus)?;
    let branches = teleport_from(ctx, teleport_profile, &channel, &schedule, theta, &rule)?;
    Ok(TeleportResult {
        theta,
        swap,
        schedule,
        rule,
        branches,
    })
}

/// Draws `shots` outcomes from branch probabilities with a seeded ChaCha
/// generator and returns the count per branch.
pub fn sample_outcomes(probabilities: &[f64], shots: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(probabilities).map_err(|e| Error::Invalid(format!("branch probabilities: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0; probabilities.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}
