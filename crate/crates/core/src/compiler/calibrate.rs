use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::selective;
use crate::analysis::process_fidelity;
use crate::engine::{segment_propagator_at, Frame, HamiltonianModel, IntegratorConfig};
use crate::linalg::{m2_exp_traceless, m2_mul, wrap_phase, CMat, C64, M2};
use crate::model::{DeviceProfile, ExchangeModeName, PulseSegment};
use crate::{Error, Result};

/// How single-qubit pulse lengths are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationTiming {
    /// `t(theta) = |theta| / (2 pi B_O)`.
    ClosedForm,
    /// Use the device's calibrated `R_Y(pi/2)` length when the profile
    /// records one, scaled linearly in `|theta|`; closed form otherwise.
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub timing: RotationTiming,
    /// Calibration fails if any gate falls below this process fidelity.
    pub min_fidelity: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            timing: RotationTiming::Device,
            min_fidelity: 0.999,
        }
    }
}

/// Two-qubit gate calibration for one adjacent pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzCalibration {
    /// Lower dot of the pair.
    pub pair: usize,
    pub mode: ExchangeModeName,
    /// Exchange-on time `1 / (2 J)` giving conditional phase pi.
    pub dwell: f64,
    /// Exchange-on time before the idle gap; the rest of the dwell follows it.
    pub first: f64,
    /// Idle (weak-mode) gap that cancels flip-flop leakage.
    pub gap: f64,
    /// Virtual `R_Z` on the lower and upper dot completing the CZ.
    pub local_z: [f64; 2],
    pub fidelity: f64,
}

impl CzCalibration {
    pub fn second(&self) -> f64 {
        self.dwell - self.first
    }

    pub fn duration(&self) -> f64 {
        self.dwell + self.gap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Profile the calibration was derived from; compiling against any
    /// other profile is refused.
    pub profile: DeviceProfile,
    pub options: CalibrationOptions,
    pub weak_mode: ExchangeModeName,
    /// Rotation rate in Hz: `R_Y(theta)` lasts `|theta| / (2 pi rate)`.
    pub rabi_rate: f64,
    /// Per-dot `R_Y(pi)` duration.
    pub ry_pi: Vec<f64>,
    /// Per-dot process fidelity of a lone `R_Y(pi/2)` segment.
    pub ry_fidelity: Vec<f64>,
    /// Per adjacent pair.
    pub cz: Vec<CzCalibration>,
}

impl Calibration {
    pub fn ry_duration(&self, angle: f64) -> f64 {
        angle.abs() / (TAU * self.rabi_rate)
    }

    pub fn cz(&self, pair: usize) -> Result<&CzCalibration> {
        self.cz
            .get(pair)
            .ok_or_else(|| Error::Calibration(format!("no CZ calibration for pair {}-{}", pair + 1, pair + 2)))
    }

    pub(crate) fn check_profile(&self, profile: &DeviceProfile) -> Result<()> {
        if *profile != self.profile {
            return Err(Error::Calibration("calibration was made for a different profile".into()));
        }
        Ok(())
    }
}

/// Calibrates single-qubit timing and every pair's CZ for `profile`.
///
/// `frame` and `cfg` select the engine used to measure the CZ phases.
pub fn calibrate(
    profile: &DeviceProfile,
    frame: Frame,
    cfg: &IntegratorConfig,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    profile.validate()?;
    let weak_mode = profile.weak_mode()?;
    let rabi_rate = match (options.timing, profile.ry_half_pi) {
        (RotationTiming::Device, Some(t)) => 1.0 / (4.0 * t),
        _ => profile.drive_amplitude,
    };
    let pi_time = 1.0 / (2.0 * rabi_rate);

    let mut ry_fidelity = Vec::with_capacity(profile.n_dots);
    for d in 0..profile.n_dots {
        let mut rot = vec![0.0; profile.n_dots];
        rot[d] = PI / 2.0;
        let solved = selective::solve(profile, 0.0, pi_time / 2.0, &rot, &vec![0.0; profile.n_dots])?;
        ry_fidelity.push(solved.fidelity);
    }

    let mut cz = Vec::with_capacity(profile.n_pairs());
    for pair in 0..profile.n_pairs() {
        let c = calibrate_zz(profile, pair, PI / 2.0, frame, cfg)?;
        cz.push(c);
    }

    let calib = Calibration {
        profile: profile.clone(),
        options: *options,
        weak_mode,
        rabi_rate,
        ry_pi: vec![pi_time; profile.n_dots],
        ry_fidelity,
        cz,
    };
    let worst = calib
        .ry_fidelity
        .iter()
        .chain(calib.cz.iter().map(|c| &c.fidelity))
        .cloned()
        .fold(1.0, f64::min);
    if worst < options.min_fidelity {
        return Err(Error::Calibration(format!(
            "gate fidelity {worst:.6} below threshold {}",
            options.min_fidelity
        )));
    }
    Ok(calib)
}

/// Anti-aligned two-spin block of one pair in the lab frame, without its
/// trace: `2 pi [[d/2, J/2], [J/2, -d/2]]` with `d` the Zeeman difference.
fn block_step(delta: f64, j: f64, t: f64) -> M2 {
    m2_exp_traceless(PI * delta * t, C64::new(PI * j * t, 0.0))
}

fn leakage(delta: f64, js: f64, jw: f64, dwell: f64, first: f64, gap: f64) -> C64 {
    let u = m2_mul(
        &block_step(delta, js, dwell - first),
        &m2_mul(&block_step(delta, jw, gap), &block_step(delta, js, first)),
    );
    u[1][0]
}

/// Finds the shortest idle gap (and its split of the dwell) for which the
/// strong-gap-strong sequence has no flip-flop amplitude left.
fn solve_composite(delta: f64, js: f64, jw: f64, dwell: f64) -> Result<(f64, f64)> {
    if dwell == 0.0 || leakage(delta, js, jw, dwell, dwell, 0.0).norm() < 1e-12 {
        return Ok((dwell, 0.0));
    }
    let period = 1.0 / delta.abs();
    let (ng, nt) = (700usize, 400usize);
    let f = |first: f64, gap: f64| leakage(delta, js, jw, dwell, first, gap).norm();
    let grid: Vec<Vec<f64>> = (0..=ng)
        .map(|i| (0..=nt).map(|j| f(dwell * j as f64 / nt as f64, period * i as f64 / ng as f64)).collect())
        .collect();

    let mut found: Vec<(f64, f64)> = Vec::new();
    for i in 0..=ng {
        for j in 0..=nt {
            let v = grid[i][j];
            let is_min = (i.saturating_sub(1)..=(i + 1).min(ng))
                .all(|a| (j.saturating_sub(1)..=(j + 1).min(nt)).all(|b| grid[a][b] >= v));
            if !is_min || v > 0.05 {
                continue;
            }
            let mut x = [dwell * j as f64 / nt as f64, period * i as f64 / ng as f64];
            for _ in 0..50 {
                let r = leakage(delta, js, jw, dwell, x[0], x[1]);
                if r.norm() < 1e-13 {
                    break;
                }
                let h = 1e-13;
                let d0 = (leakage(delta, js, jw, dwell, x[0] + h, x[1]) - r) / h;
                let d1 = (leakage(delta, js, jw, dwell, x[0], x[1] + h) - r) / h;
                let det = d0.re * d1.im - d1.re * d0.im;
                if det.abs() < 1e-300 {
                    break;
                }
                x[0] -= (d1.im * r.re - d1.re * r.im) / det;
                x[1] -= (-d0.im * r.re + d0.re * r.im) / det;
            }
            let ok = leakage(delta, js, jw, dwell, x[0], x[1]).norm() < 1e-10;
            if ok && (0.0..=dwell).contains(&x[0]) && x[1] >= 0.0 {
                found.push((x[0], x[1]));
            }
        }
    }
    let tol = 1e-13;
    found
        .into_iter()
        .min_by(|a, b| {
            let by_gap = if (a.1 - b.1).abs() < tol { std::cmp::Ordering::Equal } else { a.1.total_cmp(&b.1) };
            let ca = (a.0 - dwell / 2.0).abs();
            let cb = (b.0 - dwell / 2.0).abs();
            let by_center = if (ca - cb).abs() < tol { std::cmp::Ordering::Equal } else { ca.total_cmp(&cb) };
            by_gap.then(by_center).then(a.0.total_cmp(&b.0))
        })
        .ok_or_else(|| Error::Calibration("no leakage-free exchange sequence found".into()))
}

/// Segments realizing the exchange part of a ZZ gate.
pub(crate) fn zz_segments(c: &CzCalibration, weak: &ExchangeModeName) -> Vec<PulseSegment> {
    let label = format!("ZZ {}-{}", c.pair + 1, c.pair + 2);
    [
        (c.first, &c.mode, "a"),
        (c.gap, weak, "gap"),
        (c.second(), &c.mode, "b"),
    ]
    .into_iter()
    .filter(|(d, _, _)| *d > 0.0)
    .map(|(d, m, part)| PulseSegment::idle(d, m.clone(), format!("{label} {part}")))
    .collect()
}

fn block_indices(pair: usize) -> [usize; 4] {
    let (a, b) = (1usize << pair, 1usize << (pair + 1));
    [0, a, b, a | b]
}

/// Calibrates `exp(-i phase Z Z / 2)` on `pair`; for `phase = pi/2` the
/// returned local phases additionally include the two `R_Z(-pi/2)` that turn
/// it into a CZ.
pub(crate) fn calibrate_zz(
    profile: &DeviceProfile,
    pair: usize,
    phase: f64,
    frame: Frame,
    cfg: &IntegratorConfig,
) -> Result<CzCalibration> {
    let mode = profile.strong_mode(pair)?;
    let weak = profile.weak_mode()?;
    let js = profile.j(&mode)?[pair];
    let jw = profile.j(&weak)?[pair];
    let delta = profile.zeeman[pair + 1] - profile.zeeman[pair];
    let dwell = phase.rem_euclid(PI) / (PI * js);
    let (first, gap) = solve_composite(delta, js, jw, dwell)?;
    let mut c = CzCalibration {
        pair,
        mode,
        dwell,
        first,
        gap,
        local_z: [0.0; 2],
        fidelity: 0.0,
    };

    // Measure the block phases with the engine.
    let model = HamiltonianModel::new(profile, frame);
    let dim = 1usize << profile.n_dots;
    let mut u = CMat::identity(dim, dim);
    let mut t = 0.0;
    for seg in zz_segments(&c, &weak) {
        u = segment_propagator_at(&seg, t, &model, cfg)? * u;
        t += seg.duration;
    }
    let idx = block_indices(pair);
    let block = CMat::from_fn(4, 4, |r, col| u[(idx[r], idx[col])]);
    let p: Vec<f64> = (0..4).map(|k| block[(k, k)].arg()).collect();
    let is_cz = (phase - PI / 2.0).abs() < 1e-12;
    let target_rel = if is_cz { 0.0 } else { phase };
    let alpha = p[0] - p[1] + target_rel;
    let beta = p[0] - p[2] + target_rel;
    c.local_z = [wrap_phase(alpha), wrap_phase(beta)];

    let rz2 = |a: f64, b: f64| {
        CMat::from_diagonal(&nalgebra::DVector::from_fn(4, |k, _| {
            let za = if k & 1 == 1 { a / 2.0 } else { -a / 2.0 };
            let zb = if k & 2 == 2 { b / 2.0 } else { -b / 2.0 };
            crate::linalg::cis(za + zb)
        }))
    };
    let corrected = rz2(alpha, beta) * block;
    let target = if is_cz {
        crate::protocols::oracle::cz_matrix()
    } else {
        crate::protocols::oracle::zz_matrix(phase)
    };
    c.fidelity = process_fidelity(&corrected, &target)?;
    Ok(c)
}
