use serde::{Deserialize, Serialize};

use super::ExchangeModeName;
use crate::linalg::wrap_phase;
use crate::{Error, Result};

/// One carrier of the global microwave field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveTone {
    pub frequency: f64,
    pub amplitude: f64,
    /// Phase relative to the target dot's virtual frame.
    pub phase: f64,
    /// Dot whose frame the phase refers to. The field itself acts on all dots.
    pub target: usize,
}

/// Constant controls held for `duration` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub duration: f64,
    pub mode: ExchangeModeName,
    pub tones: Vec<DriveTone>,
    pub label: String,
}

impl PulseSegment {
    pub fn idle(duration: f64, mode: ExchangeModeName, label: impl Into<String>) -> Self {
        PulseSegment {
            duration,
            mode,
            tones: Vec::new(),
            label: label.into(),
        }
    }

    pub fn validate(&self, n_dots: usize) -> Result<()> {
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::Schedule(format!("segment `{}` has invalid duration", self.label)));
        }
        for (i, t) in self.tones.iter().enumerate() {
            if !(t.amplitude >= 0.0 && t.amplitude.is_finite()) || !(t.frequency > 0.0 && t.frequency.is_finite()) {
                return Err(Error::Schedule(format!("segment `{}` tone {i} is invalid", self.label)));
            }
            if t.target >= n_dots {
                return Err(Error::Schedule(format!("segment `{}` tone {i} targets dot {}", self.label, t.target)));
            }
            if self.tones[..i].iter().any(|o| o.frequency == t.frequency) {
                return Err(Error::Schedule(format!("segment `{}` repeats a tone frequency", self.label)));
            }
        }
        Ok(())
    }
}

/// Virtual Z rotation `R_Z(phase)` on `dot`, taking effect at `time`
/// (seconds from the start of the schedule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub time: f64,
    pub dot: usize,
    pub phase: f64,
}

/// Time-ordered control program. A schedule may describe a span of a longer
/// program: `start` is its absolute start time and `initial_phases` the
/// virtual frame accumulated before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    n_dots: usize,
    start: f64,
    initial_phases: Vec<f64>,
    segments: Vec<PulseSegment>,
    frames: Vec<FrameEvent>,
    total_duration: f64,
}

impl Schedule {
    pub fn new(n_dots: usize) -> Self {
        Self::continuing(n_dots, 0.0, vec![0.0; n_dots])
    }

    pub fn continuing(n_dots: usize, start: f64, initial_phases: Vec<f64>) -> Self {
        assert_eq!(initial_phases.len(), n_dots);
        Schedule {
            n_dots,
            start,
            initial_phases,
            segments: Vec::new(),
            frames: Vec::new(),
            total_duration: 0.0,
        }
    }

    pub fn push_segment(&mut self, segment: PulseSegment) -> Result<()> {
        segment.validate(self.n_dots)?;
        self.total_duration += segment.duration;
        self.segments.push(segment);
        Ok(())
    }

    /// Appends a virtual Z rotation at the current end of the schedule.
    pub fn push_frame(&mut self, dot: usize, phase: f64) -> Result<()> {
        if dot >= self.n_dots {
            return Err(Error::Schedule(format!("frame event on dot {dot} out of range")));
        }
        self.frames.push(FrameEvent {
            time: self.total_duration,
            dot,
            phase: wrap_phase(phase),
        });
        Ok(())
    }

    pub fn n_dots(&self) -> usize {
        self.n_dots
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + self.total_duration
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn frames(&self) -> &[FrameEvent] {
        &self.frames
    }

    pub fn initial_phases(&self) -> &[f64] {
        &self.initial_phases
    }

    /// Frame phases after every event of the schedule.
    pub fn final_phases(&self) -> Vec<f64> {
        let mut phases = self.initial_phases.clone();
        for ev in &self.frames {
            phases[ev.dot] = wrap_phase(phases[ev.dot] + ev.phase);
        }
        phases
    }

    /// Appends `next`, which must begin where `self` ends.
    pub fn append(&mut self, next: &Schedule) -> Result<()> {
        if next.n_dots != self.n_dots {
            return Err(Error::Schedule("appending a schedule for a different array".into()));
        }
        if (next.start - self.end()).abs() > 1e-15 {
            return Err(Error::Schedule("appended schedule does not start at the end of this one".into()));
        }
        let offset = self.total_duration;
        for ev in &next.frames {
            self.frames.push(FrameEvent {
                time: ev.time + offset,
                ..ev.clone()
            });
        }
        for seg in &next.segments {
            self.push_segment(seg.clone())?;
        }
        Ok(())
    }

    /// Checks the schedule invariants: abutting segments summing to the total,
    /// frame events inside `[0, total]` and only at segment boundaries.
    pub fn validate(&self) -> Result<()> {
        let mut boundaries = vec![0.0];
        let mut t = 0.0;
        for s in &self.segments {
            s.validate(self.n_dots)?;
            t += s.duration;
            boundaries.push(t);
        }
        if t != self.total_duration {
            return Err(Error::Schedule("total duration differs from the sum of segments".into()));
        }
        let eps = 1e-15 + 1e-12 * self.total_duration;
        for ev in &self.frames {
            if ev.dot >= self.n_dots {
                return Err(Error::Schedule(format!("frame event on dot {} out of range", ev.dot)));
            }
            if ev.time < -eps || ev.time > self.total_duration + eps {
                return Err(Error::Schedule(format!("frame event at {} s outside the schedule", ev.time)));
            }
            if !boundaries.iter().any(|b| (b - ev.time).abs() <= eps) {
                return Err(Error::Schedule(format!("frame event at {} s falls inside a segment", ev.time)));
            }
        }
        if self.frames.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::Schedule("frame events are not time ordered".into()));
        }
        Ok(())
    }
}
