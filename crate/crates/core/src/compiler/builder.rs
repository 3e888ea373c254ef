use std::f64::consts::PI;

use super::calibrate::{calibrate_zz, zz_segments, Calibration, CzCalibration};
use super::circuit::{validate_group, Circuit, GateSpec};
use super::selective;
use crate::engine::{Frame, IntegratorConfig};
use crate::linalg::wrap_phase;
use crate::model::{DeviceProfile, PulseSegment, Schedule};
use crate::Result;

/// Incremental circuit compiler that tracks absolute time and the virtual
/// frame, so a program can be compiled in spans that continue each other.
pub struct ScheduleBuilder<'a> {
    calib: &'a Calibration,
    schedule: Schedule,
    phases: Vec<f64>,
}

impl<'a> ScheduleBuilder<'a> {
    pub fn new(calib: &'a Calibration) -> Self {
        let n = calib.profile.n_dots;
        Self::continuing(calib, 0.0, vec![0.0; n])
    }

    /// Starts at absolute time `start` with frame `phases`.
    pub fn continuing(calib: &'a Calibration, start: f64, phases: Vec<f64>) -> Self {
        let n = calib.profile.n_dots;
        ScheduleBuilder {
            calib,
            schedule: Schedule::continuing(n, start, phases.clone()),
            phases,
        }
    }

    fn profile(&self) -> &DeviceProfile {
        &self.calib.profile
    }

    pub fn time(&self) -> f64 {
        self.schedule.end()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    fn frame(&mut self, dot: usize, phase: f64) -> Result<()> {
        if phase == 0.0 {
            return Ok(());
        }
        self.phases[dot] = wrap_phase(self.phases[dot] + phase);
        self.schedule.push_frame(dot, phase)
    }

    pub fn push_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        for g in &circuit.groups {
            self.push_group(g)?;
        }
        Ok(())
    }

    /// Compiles one parallel group into the next span of the schedule.
    pub fn push_group(&mut self, group: &[GateSpec]) -> Result<()> {
        let n = self.profile().n_dots;
        validate_group(group, n)?;
        if let [gate] = group {
            match *gate {
                GateSpec::Cz { a, b } => return self.push_zz(a.min(b), None),
                GateSpec::Zz { a, b, phase } => return self.push_zz(a.min(b), Some(phase)),
                GateSpec::Cnot { control, target } => {
                    self.push_group(&[GateSpec::Ry { dot: target, angle: -PI / 2.0 }])?;
                    self.push_zz(control.min(target), None)?;
                    return self.push_group(&[GateSpec::Ry { dot: target, angle: PI / 2.0 }]);
                }
                _ => {}
            }
        }

        let mut rotations = vec![0.0; n];
        for gate in group {
            match *gate {
                // Equal up to a global sign modulo 2 pi.
                GateSpec::Ry { dot, angle } => rotations[dot] = (angle + PI).rem_euclid(2.0 * PI) - PI,
                GateSpec::Rz { dot, angle } => self.frame(dot, angle)?,
                GateSpec::H { dot } => {
                    self.frame(dot, PI)?;
                    rotations[dot] = PI / 2.0;
                }
                _ => unreachable!("two-qubit gates are alone in their group"),
            }
        }
        let widest = rotations.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if widest == 0.0 {
            return Ok(());
        }
        let duration = self.calib.ry_duration(widest);
        let solved = selective::solve(self.profile(), self.time(), duration, &rotations, &self.phases)?;
        if solved.fidelity < 1.0 - 1e-9 {
            return Err(crate::Error::Calibration(format!(
                "selective pulse for `{}` reached fidelity {:.12}",
                group.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" | "),
                solved.fidelity
            )));
        }
        let label = group.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" | ");
        self.schedule.push_segment(PulseSegment {
            duration,
            mode: self.calib.weak_mode.clone(),
            tones: solved.tones,
            label,
        })?;
        for (dot, chi) in solved.corrections.into_iter().enumerate() {
            self.frame(dot, chi)?;
        }
        Ok(())
    }

    /// `phase = None` is the calibrated CZ; otherwise `exp(-i phase ZZ / 2)`.
    fn push_zz(&mut self, pair: usize, phase: Option<f64>) -> Result<()> {
        let c: CzCalibration = match phase {
            None => self.calib.cz(pair)?.clone(),
            Some(phi) => calibrate_zz(self.profile(), pair, phi, Frame::Rwa, &IntegratorConfig::for_frame(Frame::Rwa))?,
        };
        for seg in zz_segments(&c, &self.calib.weak_mode) {
            self.schedule.push_segment(seg)?;
        }
        self.frame(pair, c.local_z[0])?;
        self.frame(pair + 1, c.local_z[1])
    }

    /// Returns the schedule compiled so far and continues with a fresh span.
    pub fn split(&mut self) -> Schedule {
        let next = Schedule::continuing(self.profile().n_dots, self.time(), self.phases.clone());
        std::mem::replace(&mut self.schedule, next)
    }

    pub fn finish(self) -> Schedule {
        self.schedule
    }
}

/// Compiles a single gate as a stand-alone fragment starting at `t = 0`.
pub fn compile_gate(gate: &GateSpec, calib: &Calibration, profile: &DeviceProfile) -> Result<Schedule> {
    calib.check_profile(profile)?;
    let mut b = ScheduleBuilder::new(calib);
    b.push_group(std::slice::from_ref(gate))?;
    Ok(b.finish())
}

/// Compiles a circuit; each group becomes one consecutive span.
pub fn compile_circuit(circuit: &Circuit, calib: &Calibration, profile: &DeviceProfile) -> Result<Schedule> {
    calib.check_profile(profile)?;
    circuit.validate(profile.n_dots)?;
    let mut b = ScheduleBuilder::new(calib);
    b.push_circuit(circuit)?;
    Ok(b.finish())
}
