use crate::error::{Error, Result};

/// Partition of `[-depth, T]` into cells.
///
/// From left to right: geometric far-field cells (optional), `n_past`
/// uniform cells of width `dt` covering `[-T_trunc, 0]`, then `n_future`
/// uniform cells covering `[0, T]`. Uniform points are exact multiples of
/// `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    dt: f64,
    n_past: usize,
    n_future: usize,
    n_far: usize,
    points: Vec<f64>,
}

/// Relative width of a far-field cell, `|b - a| / |b|`.
pub const FAR_CELL_RATIO: f64 = 0.05;

impl SimGrid {
    pub fn new(dt: f64, n_past: usize, n_future: usize) -> Result<Self> {
        Self::with_far_field(dt, n_past, n_future, 0.0)
    }

    /// Grid covering `[-t_trunc, horizon]` with `dt` dividing both lengths
    /// up to rounding to the nearest cell.
    pub fn uniform(dt: f64, t_trunc: f64, horizon: f64) -> Result<Self> {
        check_dt(dt)?;
        Self::new(dt, steps(t_trunc, dt)?, steps(horizon, dt)?)
    }

    /// Uniform grid extended by geometric cells out to `far_depth`.
    pub fn with_far_field(dt: f64, n_past: usize, n_future: usize, far_depth: f64) -> Result<Self> {
        check_dt(dt)?;
        if n_future == 0 {
            return Err(Error::InvalidParameter("grid needs at least one future step".into()));
        }
        let t_trunc = n_past as f64 * dt;
        let mut far = Vec::new();
        if far_depth > t_trunc {
            let mut s = -t_trunc;
            if n_past == 0 {
                s = -dt;
                far.push(s);
            }
            while -s < far_depth {
                s *= 1.0 + FAR_CELL_RATIO;
                far.push(s);
            }
            far.reverse();
        }
        let n_far = far.len();
        let mut points = far;
        let first = -(n_past as i64);
        for i in first..=n_future as i64 {
            points.push(i as f64 * dt);
        }
        Ok(Self {
            dt,
            n_past,
            n_future,
            n_far,
            points,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_past(&self) -> usize {
        self.n_past
    }
    pub fn n_future(&self) -> usize {
        self.n_future
    }
    pub fn n_far(&self) -> usize {
        self.n_far
    }
    pub fn horizon(&self) -> f64 {
        self.n_future as f64 * self.dt
    }
    pub fn t_trunc(&self) -> f64 {
        self.n_past as f64 * self.dt
    }
    /// Distance from 0 to the leftmost partition point.
    pub fn depth(&self) -> f64 {
        -self.points[0]
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn n_cells(&self) -> usize {
        self.points.len() - 1
    }
    /// Index of the partition point `0`.
    pub fn zero_index(&self) -> usize {
        self.n_far + self.n_past
    }
    /// Index of the first uniform partition point.
    pub fn first_uniform(&self) -> usize {
        self.n_far
    }
    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.points[k], self.points[k + 1])
    }
    pub fn width(&self, k: usize) -> f64 {
        self.points[k + 1] - self.points[k]
    }
    /// Partition index of the uniform time `i·dt`.
    pub fn index_of_step(&self, i: i64) -> usize {
        (self.zero_index() as i64 + i) as usize
    }
    /// Times `0, dt, ..., T`.
    pub fn future_times(&self) -> Vec<f64> {
        (0..=self.n_future).map(|i| i as f64 * self.dt).collect()
    }
    /// Partition index of the future time nearest to `t`.
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let i = (t / self.dt).round();
        if i < -(self.n_past as f64) || i > self.n_future as f64 || ((i * self.dt) - t).abs() > 1e-9 * self.dt.max(t.abs()) {
            return Err(Error::Domain(format!("time {t} is not a uniform grid point")));
        }
        Ok(self.index_of_step(i as i64))
    }

    /// Grid with twice the step on the same span; far cells unchanged.
    pub fn coarsen(&self) -> Result<Self> {
        if self.n_future % 2 != 0 || self.n_past % 2 != 0 {
            return Err(Error::InvalidParameter("coarsening needs even step counts".into()));
        }
        let far_depth = if self.n_far > 0 { self.depth() } else { 0.0 };
        let g = Self::with_far_field(2.0 * self.dt, self.n_past / 2, self.n_future / 2, far_depth)?;
        Ok(g)
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive (got {dt})")));
    }
    Ok(())
}

fn steps(len: f64, dt: f64) -> Result<usize> {
    if !(len >= 0.0) || !len.is_finite() {
        return Err(Error::InvalidParameter(format!("interval length must be nonnegative (got {len})")));
    }
    Ok((len / dt).round() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_layout() {
        let g = SimGrid::uniform(0.25, 1.0, 2.0).unwrap();
        assert_eq!(g.n_cells(), 12);
        assert_eq!(g.zero_index(), 4);
        assert_eq!(g.points()[g.zero_index()], 0.0);
        assert_eq!(g.horizon(), 2.0);
        assert_eq!(g.index_of_time(1.5).unwrap(), 10);
        assert!(g.index_of_time(0.3).is_err());
    }

    #[test]
    fn far_field_is_geometric_and_continuous() {
        let g = SimGrid::with_far_field(0.125, 8, 8, 1e4).unwrap();
        assert!(g.depth() >= 1e4);
        assert_eq!(g.points()[g.first_uniform()], -1.0);
        for w in g.points().windows(2) {
            assert!(w[1] > w[0]);
        }
        for k in 0..g.n_far() {
            let (a, b) = g.cell(k);
            assert!(((b - a) / b.abs() - FAR_CELL_RATIO).abs() < 1e-9);
        }
        let c = g.coarsen().unwrap();
        assert_eq!(c.n_far(), g.n_far());
        assert_eq!(c.points()[..c.n_far()], g.points()[..g.n_far()]);
    }

    #[test]
    fn far_field_without_uniform_past() {
        let g = SimGrid::with_far_field(0.5, 0, 4, 100.0).unwrap();
        assert_eq!(g.points()[g.zero_index()], 0.0);
        for w in g.points().windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
