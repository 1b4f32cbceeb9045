//! Total-success-probability curves over a grid of |α|².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::protocol::{run_ecp2, ProtocolParams};

/// `steps` evenly spaced points from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        let g = Grid { min, max, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |x: f64| x > 0.0 && x < 1.0;
        if !inside(self.min) || !inside(self.max) {
            return Err(Error::Domain(format!(
                "grid bounds must lie in (0, 1), got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.steps < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 steps, got {}", self.steps)));
        }
        if self.min >= self.max {
            return Err(Error::Domain(format!(
                "degenerate grid: min {} must be below max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Evenly spaced points with both ends exact. Interior points are laid
    /// out from the centre, so a grid symmetric about 1/2 yields exactly
    /// mirrored values and hits 1/2 itself when `steps` is odd.
    pub fn points(&self) -> Vec<f64> {
        let last = self.steps - 1;
        let centre = (self.min + self.max) / 2.0;
        let half = (self.max - self.min) / 2.0;
        (0..self.steps)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => centre + half * ((2 * i) as f64 - last as f64) / last as f64,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha_sq: f64,
    pub alpha: f64,
    pub rounds: u32,
    pub p_total: f64,
    /// Unconditional success probability of each round.
    pub p_k: Vec<f64>,
}

/// Runs the recycling protocol at every grid value, in grid order.
pub fn p_total_curve(alpha_sq_grid: &[f64], rounds: u32) -> Result<Vec<CurvePoint>> {
    p_total_curve_with(alpha_sq_grid, rounds, Execution::default())
}

pub fn p_total_curve_with(alpha_sq_grid: &[f64], rounds: u32, execution: Execution) -> Result<Vec<CurvePoint>> {
    exec::map(alpha_sq_grid, execution, |&a| curve_point(a, rounds))
        .into_iter()
        .collect()
}

fn curve_point(alpha_sq: f64, rounds: u32) -> Result<CurvePoint> {
    let report = run_ecp2(&ProtocolParams::new(alpha_sq, rounds)?)?;
    Ok(CurvePoint {
        alpha_sq,
        alpha: alpha_sq.sqrt(),
        rounds,
        p_total: report.p_total,
        p_k: report.rounds.iter().map(|r| r.success_prob_unconditional).collect(),
    })
}
