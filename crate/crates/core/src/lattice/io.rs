//! Plain-text checkpoint format for lattice states.
//!
//! ```text
//! # radius=<W>
//! # time=<t>
//! site,re,im
//! -W,<re>,<im>
//! ...
//! ```
//! Floats are written in shortest round-trip exponent form, so a dump and
//! reload reproduces the state bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use super::LatticeState;
use crate::error::{Error, Result};

impl LatticeState {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# radius={}", self.radius)?;
        writeln!(out, "# time={:e}", self.time)?;
        writeln!(out, "site,re,im")?;
        for (j, a) in self.iter() {
            writeln!(out, "{j},{:e},{:e}", a.re, a.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut radius: Option<usize> = None;
        let mut time = 0.0;
        let mut values: Vec<(i64, Complex64)> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::parse("state csv", e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.trim().split_once('=') {
                    match key.trim() {
                        "radius" => {
                            radius =
                                Some(value.trim().parse().map_err(|_| {
                                    Error::parse("state csv", format!("bad radius on line {}", lineno + 1))
                                })?)
                        }
                        "time" => {
                            time = value
                                .trim()
                                .parse()
                                .map_err(|_| Error::parse("state csv", format!("bad time on line {}", lineno + 1)))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("site") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    "state csv",
                    format!("expected 3 fields on line {}", lineno + 1),
                ));
            }
            let bad = || Error::parse("state csv", format!("bad number on line {}", lineno + 1));
            let site: i64 = fields[0].parse().map_err(|_| bad())?;
            let re: f64 = fields[1].parse().map_err(|_| bad())?;
            let im: f64 = fields[2].parse().map_err(|_| bad())?;
            values.push((site, Complex64::new(re, im)));
        }
        let radius = match radius {
            Some(r) => r,
            None => values
                .iter()
                .map(|(j, _)| j.unsigned_abs() as usize)
                .max()
                .ok_or_else(|| Error::parse("state csv", "no data rows"))?,
        };
        let mut state = LatticeState::from_sites(radius, values)?;
        state.time = time;
        Ok(state)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_csv(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            radius in 1usize..12,
            seed in proptest::collection::vec((-1e3f64..1e3, -1e-30f64..1e-30), 25),
            time in 0.0f64..1e6,
        ) {
            let amps: Vec<Complex64> = (0..2 * radius + 1)
                .map(|i| {
                    let (a, b) = seed[i % seed.len()];
                    Complex64::new(a / (i as f64 + 1.0), b * 3.7)
                })
                .collect();
            let mut state = LatticeState::from_amplitudes(radius, amps).unwrap();
            state.set_time(time);
            let mut buf = Vec::new();
            state.write_csv(&mut buf).unwrap();
            let back = LatticeState::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, state);
        }
    }
}
