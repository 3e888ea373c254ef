use super::integrate::evolve;
use super::operator::zeeman_energy;
use super::{HamiltonianModel, IntegratorConfig};
use crate::linalg::{cis, CMat, C64};
use crate::model::{DeviceProfile, QuantumState, Schedule};
use crate::{Error, Result};

/// Per-basis-state phase of `V(phases) U0(t)^dagger`, where `U0` is the free
/// Zeeman evolution and `V = prod_i R_Z(phase_i)`.
fn frame_phase(profile: &DeviceProfile, t: f64, phases: &[f64], index: usize) -> f64 {
    let virt: f64 = phases
        .iter()
        .enumerate()
        .map(|(s, p)| if index >> s & 1 == 1 { p / 2.0 } else { -p / 2.0 })
        .sum();
    zeeman_energy(profile, index) * t + virt
}

fn check(profile: &DeviceProfile, state: &QuantumState, phases: &[f64]) -> Result<()> {
    if state.n_qubits() != profile.n_dots {
        return Err(Error::Dimension {
            expected: profile.n_dots,
            got: state.n_qubits(),
        });
    }
    if phases.len() != profile.n_dots {
        return Err(Error::Dimension {
            expected: profile.n_dots,
            got: phases.len(),
        });
    }
    Ok(())
}

fn rotate(profile: &DeviceProfile, state: &QuantumState, t: f64, phases: &[f64], sign: f64) -> QuantumState {
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, a)| a * cis(sign * frame_phase(profile, t, phases, k)))
        .collect();
    QuantumState::from_raw(state.n_qubits(), amps)
}

/// Maps a lab-frame state at time `t` to the logical frame: applies
/// `exp(+i pi f_i t Z_i)` and `R_Z(phase_i)` on every dot.
pub fn frame_unwind(state: &QuantumState, t: f64, profile: &DeviceProfile, phases: &[f64]) -> Result<QuantumState> {
    check(profile, state, phases)?;
    Ok(rotate(profile, state, t, phases, 1.0))
}

/// Inverse of [`frame_unwind`]: logical-frame state to lab frame at time `t`.
pub fn frame_wind(state: &QuantumState, t: f64, profile: &DeviceProfile, phases: &[f64]) -> Result<QuantumState> {
    check(profile, state, phases)?;
    Ok(rotate(profile, state, t, phases, -1.0))
}

/// Logical-frame propagator of `schedule` restricted to `dots`, with every
/// other dot starting in `|down>`. Entry `(r, c)` is the amplitude of local
/// basis state `r` after evolving local basis state `c`; local bit `j` is
/// `dots[j]`. Leakage out of the subspace shows up as a non-unitary result.
pub fn logical_propagator(
    schedule: &Schedule,
    dots: &[usize],
    model: &HamiltonianModel,
    cfg: &IntegratorConfig,
) -> Result<CMat> {
    let n = model.profile.n_dots;
    if dots.iter().any(|&d| d >= n) {
        return Err(Error::Invalid("dot out of range".into()));
    }
    let global = |local: usize| dots.iter().enumerate().fold(0usize, |g, (j, &d)| g | (local >> j & 1) << d);
    let m = 1usize << dots.len();
    let mut u = CMat::zeros(m, m);
    for c in 0..m {
        let input = frame_wind(&QuantumState::basis(n, global(c)), schedule.start(), model.profile, schedule.initial_phases())?;
        let out = evolve(&input, schedule, model, cfg)?;
        let out = frame_unwind(&out, schedule.end(), model.profile, &schedule.final_phases())?;
        for r in 0..m {
            u[(r, c)] = out.amplitudes()[global(r)];
        }
    }
    Ok(u)
}
