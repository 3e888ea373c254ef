//! Matrix-free Hamiltonian of one pulse segment.
//!
//! Both frames are represented in the interaction picture of the Zeeman term
//! `H0 = sum_i pi f_i Z_i`. In the lab frame every drive term is kept (the
//! transformation is exact); in the rwa frame only co-rotating drive terms
//! survive.

use std::f64::consts::{PI, TAU};

use super::Frame;
use crate::linalg::{cis, CMat, C64, I, ZERO};
use crate::model::{DeviceProfile, PulseSegment};
use crate::Result;

struct FlipFlop {
    /// `pi J` in rad/s.
    coupling: f64,
    /// `2 pi (f_i - f_{i+1})`.
    omega: f64,
    /// Basis pairs `(from, to)`: `from` has dot i down and dot i+1 up.
    moves: Vec<(usize, usize)>,
}

struct LabTone {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

pub(crate) struct SegmentOperator {
    n: usize,
    frame: Frame,
    diag: Vec<f64>,
    flips: Vec<FlipFlop>,
    /// rwa: per dot, terms `(i pi A e^{-i psi}, omega_s - omega_k)`.
    rwa_terms: Vec<Vec<(C64, f64)>>,
    lab_tones: Vec<LabTone>,
    dot_omega: Vec<f64>,
    coeff: Vec<C64>,
}

/// `pi f_i z_i` summed over dots, with `z = +1` for spin up.
pub(crate) fn zeeman_energy(profile: &DeviceProfile, index: usize) -> f64 {
    profile
        .zeeman
        .iter()
        .enumerate()
        .map(|(s, f)| if index >> s & 1 == 1 { PI * f } else { -PI * f })
        .sum()
}

impl SegmentOperator {
    /// `phase_offsets[d]` is added to the phase of every tone targeting dot `d`.
    pub(crate) fn new(
        profile: &DeviceProfile,
        segment: &PulseSegment,
        frame: Frame,
        phase_offsets: Option<&[f64]>,
    ) -> Result<Self> {
        let n = profile.n_dots;
        let dim = 1usize << n;
        let js = profile.j(&segment.mode)?;
        let mut diag = vec![0.0; dim];
        let mut flips = Vec::new();
        for (i, &j) in js.iter().enumerate() {
            if j == 0.0 {
                continue;
            }
            let (bi, bj) = (1usize << i, 1usize << (i + 1));
            let mut moves = Vec::with_capacity(dim / 4);
            for (k, d) in diag.iter_mut().enumerate() {
                // (2 pi J / 4)(z z - 1): zero when aligned, -pi J when anti-aligned.
                if (k & bi == 0) != (k & bj == 0) {
                    *d -= PI * j;
                }
                if k & bi == 0 && k & bj != 0 {
                    moves.push((k, (k | bi) & !bj));
                }
            }
            flips.push(FlipFlop {
                coupling: PI * j,
                omega: TAU * (profile.zeeman[i] - profile.zeeman[i + 1]),
                moves,
            });
        }

        let dot_omega: Vec<f64> = profile.zeeman.iter().map(|f| TAU * f).collect();
        let phases: Vec<f64> = segment
            .tones
            .iter()
            .map(|t| t.phase + phase_offsets.map_or(0.0, |p| p[t.target]))
            .collect();
        let mut rwa_terms = vec![Vec::new(); n];
        let mut lab_tones = Vec::new();
        for (tone, &psi) in segment.tones.iter().zip(&phases) {
            if tone.amplitude == 0.0 {
                continue;
            }
            let wk = TAU * tone.frequency;
            for (s, terms) in rwa_terms.iter_mut().enumerate() {
                terms.push((I * PI * tone.amplitude * cis(-psi), dot_omega[s] - wk));
            }
            lab_tones.push(LabTone {
                amplitude: TAU * tone.amplitude,
                omega: wk,
                phase: psi,
            });
        }
        Ok(SegmentOperator {
            n,
            frame,
            diag,
            flips,
            rwa_terms,
            lab_tones,
            dot_omega,
            coeff: vec![ZERO; n],
        })
    }

    pub(crate) fn dim(&self) -> usize {
        1 << self.n
    }

    /// Raising-operator coefficient of each dot's drive term at time `t`.
    fn update_coefficients(&mut self, t: f64) {
        match self.frame {
            Frame::Rwa => {
                for (c, terms) in self.coeff.iter_mut().zip(&self.rwa_terms) {
                    *c = terms.iter().map(|(a, w)| a * cis(w * t)).sum();
                }
            }
            Frame::Lab => {
                let b: f64 = self
                    .lab_tones
                    .iter()
                    .map(|tone| tone.amplitude * (tone.omega * t + tone.phase).cos())
                    .sum();
                for (c, w) in self.coeff.iter_mut().zip(&self.dot_omega) {
                    *c = if b == 0.0 { ZERO } else { I * b * cis(w * t) };
                }
            }
        }
    }

    /// `out = H(t) psi`.
    pub(crate) fn apply(&mut self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.update_coefficients(t);
        for ((o, p), d) in out.iter_mut().zip(psi).zip(&self.diag) {
            *o = p * *d;
        }
        for f in &self.flips {
            let c = cis(f.omega * t) * f.coupling;
            let cc = c.conj();
            for &(from, to) in &f.moves {
                out[to] += c * psi[from];
                out[from] += cc * psi[to];
            }
        }
        for (s, &c) in self.coeff.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let bit = 1usize << s;
            let cc = c.conj();
            for k in 0..psi.len() {
                if k & bit == 0 {
                    out[k | bit] += c * psi[k];
                    out[k] += cc * psi[k | bit];
                }
            }
        }
    }

    /// Dense interaction-picture Hamiltonian at time `t`.
    pub(crate) fn dense(&mut self, t: f64) -> CMat {
        let dim = self.dim();
        let mut h = CMat::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            e.iter_mut().for_each(|x| *x = ZERO);
            e[j] = C64::new(1.0, 0.0);
            self.apply(t, &e, &mut col);
            for (i, v) in col.iter().enumerate() {
                h[(i, j)] = *v;
            }
        }
        h
    }
}
