use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    #[serde(rename = "64qam")]
    Qam64,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qpsk => 4,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
            Modulation::Qam64 => "64qam",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" => Ok(Modulation::Qam16),
            "64qam" => Ok(Modulation::Qam64),
            other => Err(Error::Parse(format!("unknown modulation '{other}'"))),
        }
    }
}

/// Gray-labelled unit-energy constellation.
///
/// Point `points[label]` carries the bits of `label`, most significant bit
/// first. For square QAM the first half of the bits selects the in-phase
/// level and the second half the quadrature level, each Gray coded with bit
/// value 0 on the positive side. QPSK label `00` is `(1 + j) / sqrt(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    modulation: Modulation,
    points: Vec<Complex64>,
}

fn gray_to_index(g: usize) -> usize {
    let mut b = g;
    let mut s = g >> 1;
    while s > 0 {
        b ^= s;
        s >>= 1;
    }
    b
}

/// Gray-coded PAM level for `bits` on an axis with `levels` points.
fn pam_level(bits: usize, levels: usize) -> f64 {
    (levels as f64 - 1.0) - 2.0 * gray_to_index(bits) as f64
}

impl Constellation {
    pub fn new(modulation: Modulation) -> Self {
        let m = modulation.order();
        let points = match modulation {
            Modulation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            _ => {
                let k = modulation.bits_per_symbol() / 2;
                let levels = 1 << k;
                let scale = 1.0 / (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
                (0..m)
                    .map(|label| {
                        let i_bits = label >> k;
                        let q_bits = label & (levels - 1);
                        Complex64::new(pam_level(i_bits, levels), pam_level(q_bits, levels)) * scale
                    })
                    .collect()
            }
        };
        Self { modulation, points }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Nearest point label; ties go to the lowest label.
    pub fn decide(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = label;
                best_d = d;
            }
        }
        best
    }

    /// Minimum distance between two distinct points.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// Maps a bit stream (values 0/1) to constellation symbols.
pub fn map_bits(bits: &[u8], constellation: &Constellation) -> Result<Vec<Complex64>> {
    let k = constellation.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!(
            "bit count {} is not a multiple of {k} bits per symbol",
            bits.len()
        )));
    }
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(Error::InvalidParameter(format!("bit {pos} is not 0 or 1")));
    }
    Ok(bits
        .chunks(k)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            constellation.points[label]
        })
        .collect())
}

/// Hard-decides each symbol to the nearest point and emits its label bits.
pub fn demap_symbols(symbols: &[Complex64], constellation: &Constellation) -> Vec<u8> {
    let k = constellation.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * k);
    for &z in symbols {
        let label = constellation.decide(z);
        for shift in (0..k).rev() {
            bits.push(((label >> shift) & 1) as u8);
        }
    }
    bits
}
