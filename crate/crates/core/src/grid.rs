//! `start:stop:count` grids.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count, log: false }
    }

    pub fn with_log(mut self, log: bool) -> Self {
        self.log = log;
        self
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidInput("grid count must be at least 1".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidInput("grid bounds must be finite".into()));
        }
        if self.log && (self.start <= 0.0 || self.stop <= 0.0) {
            return Err(Error::InvalidInput("log grid needs positive bounds".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let last = (self.count - 1) as f64;
        let pts = (0..self.count).map(|k| {
            let t = k as f64 / last;
            if self.log {
                (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
            } else {
                self.start + t * (self.stop - self.start)
            }
        });
        let mut v: Vec<f64> = pts.collect();
        // pin the endpoints exactly
        v[0] = self.start;
        v[self.count - 1] = self.stop;
        Ok(v)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidInput(format!("grid '{s}' is not start:stop:count"));
        match parts.as_slice() {
            [single] => {
                let v: f64 = single.trim().parse().map_err(|_| bad())?;
                Ok(Self::linear(v, v, 1))
            }
            [a, b, c] => Ok(Self::linear(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                c.trim().parse().map_err(|_| bad())?,
            )),
            _ => Err(bad()),
        }
    }
}
