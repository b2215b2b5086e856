//! Uniform grids and the minimum scan used by every grid condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{try_map_range, Execution};

/// Local density factor of the refinement pass around an argmin.
pub const REFINE_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::InvalidArgument(format!(
                "grid span [{start}, {end}] is empty or not finite"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points, got {points}"
            )));
        }
        Ok(UniformGrid { start, end, points })
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.points - 1) as f64
    }

    /// The i-th node; the last node is exactly `end`.
    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.at(i)).collect()
    }

    /// Evaluates `f` at every node.
    pub fn eval<T, F, E>(&self, exec: Execution, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        F: Fn(f64) -> Result<T, E> + Sync + Send,
        E: Send,
    {
        try_map_range(exec, self.points, |i| f(self.at(i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub min: f64,
    pub argmin: f64,
    /// Earliest `t` where the value drops below the threshold, located by
    /// bisection between the last good and first bad node.
    pub first_below: Option<f64>,
}

/// Minimum of `f` over the grid followed by one refinement pass of
/// [`REFINE_FACTOR`]× density on the two cells around the coarse argmin.
pub fn scan_min<F, E>(grid: &UniformGrid, exec: Execution, threshold: f64, f: F) -> Result<ScanResult, E>
where
    F: Fn(f64) -> Result<f64, E> + Sync + Send,
    E: Send,
{
    let values = grid.eval(exec, &f)?;
    let (mut imin, mut min) = (0, values[0]);
    for (i, &v) in values.iter().enumerate() {
        // NaN counts as the worst possible value.
        if v < min || (v.is_nan() && !min.is_nan()) {
            imin = i;
            min = v;
        }
    }
    let mut argmin = grid.at(imin);

    let lo = grid.at(imin.saturating_sub(1));
    let hi = grid.at((imin + 1).min(grid.points - 1));
    let cells = if imin == 0 || imin + 1 == grid.points { 1 } else { 2 };
    let sub = UniformGrid {
        start: lo,
        end: hi,
        points: cells * REFINE_FACTOR + 1,
    };
    if !min.is_nan() {
        let refined = sub.eval(exec, &f)?;
        for (j, &v) in refined.iter().enumerate() {
            if v < min || v.is_nan() {
                min = v;
                argmin = sub.at(j);
                if v.is_nan() {
                    break;
                }
            }
        }
    }

    let first_below = match values.iter().position(|&v| !(v >= threshold)) {
        None if min >= threshold => None,
        None => Some(argmin),
        Some(0) => Some(grid.start),
        Some(k) => {
            let (mut a, mut b) = (grid.at(k - 1), grid.at(k));
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if f(m)? >= threshold {
                    a = m;
                } else {
                    b = m;
                }
            }
            Some(b)
        }
    };
    Ok(ScanResult {
        min,
        argmin,
        first_below,
    })
}

/// Maximum of `f`, via [`scan_min`] on `-f`.
pub fn scan_max<F, E>(grid: &UniformGrid, exec: Execution, f: F) -> Result<(f64, f64), E>
where
    F: Fn(f64) -> Result<f64, E> + Sync + Send,
    E: Send,
{
    let r = scan_min(grid, exec, f64::NEG_INFINITY, |t| f(t).map(|v| -v))?;
    Ok((-r.min, r.argmin))
}
