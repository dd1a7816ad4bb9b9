//! Time-parameterized families of maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transfer::TransferMatrix;

pub trait MapFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn transfer_at(&self, t: f64) -> Result<TransferMatrix>;
}

impl<F: MapFamily + ?Sized> MapFamily for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn transfer_at(&self, t: f64) -> Result<TransferMatrix> {
        (**self).transfer_at(t)
    }
}

impl<F: MapFamily + ?Sized> MapFamily for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn transfer_at(&self, t: f64) -> Result<TransferMatrix> {
        (**self).transfer_at(t)
    }
}

/// The same map at every time.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFamily(pub TransferMatrix);

impl MapFamily for ConstantFamily {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn transfer_at(&self, _t: f64) -> Result<TransferMatrix> {
        Ok(self.0.clone())
    }
}

/// Maps given on a time grid, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFamily {
    times: Vec<f64>,
    maps: Vec<TransferMatrix>,
}

impl SampledFamily {
    pub fn new(times: Vec<f64>, maps: Vec<TransferMatrix>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if times.len() != maps.len() {
            return Err(Error::DimensionMismatch(format!("{} times but {} maps", times.len(), maps.len())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::OrderingViolated("sample times must be strictly increasing".into()));
        }
        let dim = maps[0].dim();
        if maps.iter().any(|m| !m.is_square() || m.dim() != dim) {
            return Err(Error::DimensionMismatch("all sampled maps must share one square dimension".into()));
        }
        Ok(Self { times, maps })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn maps(&self) -> &[TransferMatrix] {
        &self.maps
    }
}

impl MapFamily for SampledFamily {
    fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    fn transfer_at(&self, t: f64) -> Result<TransferMatrix> {
        let n = self.times.len();
        if t <= self.times[0] {
            return Ok(self.maps[0].clone());
        }
        if t >= self.times[n - 1] {
            return Ok(self.maps[n - 1].clone());
        }
        let k = self.times.partition_point(|&s| s <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let m = self.maps[k - 1].matrix() * (1.0 - w) + self.maps[k].matrix() * w;
        TransferMatrix::new(self.dim(), m)
    }
}

/// Uniform grid `start:stop:steps` with `steps` points including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { start, stop, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + h * i as f64).collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid must be start:stop:steps, got {s:?}")));
        }
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("grid bound {x:?}: {e}")));
        let steps = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("grid steps {:?}: {e}", parts[2])))?;
        Grid::new(num(parts[0])?, num(parts[1])?, steps)
    }
}
