//! The placement MDP.
//!
//! Actions are grid cells; placing a charger earns its cell's demand (once
//! per episode per cell) plus the fraction of its coverage square that is
//! newly covered. An optional dynamic mode decays demand around each
//! placement. The agent observes how far it is from the maximum collectible
//! demand and coverage.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::demand::DemandGrid;
use crate::error::{Error, Result};

/// Environment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Chargers placed per episode.
    pub budget: usize,
    /// Coverage square half-width in cells: a placement covers the clipped
    /// (2r+1) x (2r+1) square around its cell.
    pub coverage_radius: usize,
    /// Demand weight in the reward.
    pub w_d: f64,
    /// Coverage weight in the reward.
    pub w_c: f64,
    /// Decay demand around each placement.
    pub dynamic: bool,
    /// Decay parameter: the placed cell's demand is multiplied by 1 - 1/f.
    pub decay_f: f64,
    /// Decay square half-width in cells.
    pub decay_radius: usize,
    /// Subtracted when a placement repeats an already-placed cell exactly.
    pub duplicate_penalty: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            budget: 10,
            coverage_radius: 2,
            w_d: 1.0,
            w_c: 1.0,
            dynamic: false,
            decay_f: 2.0,
            decay_radius: 2,
            duplicate_penalty: 1.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidParameter("budget must be >= 1".into()));
        }
        if !(self.w_d >= 0.0) || !(self.w_c >= 0.0) {
            return Err(Error::InvalidParameter(
                "reward weights must be >= 0".into(),
            ));
        }
        if !(self.decay_f > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decay_f {} must be > 1 to keep demand positive",
                self.decay_f
            )));
        }
        if !(self.duplicate_penalty >= 0.0) {
            return Err(Error::InvalidParameter(
                "duplicate_penalty must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Cells in a full (unclipped) coverage square.
    pub fn coverage_area(&self) -> f64 {
        let side = 2 * self.coverage_radius + 1;
        (side * side) as f64
    }
}

/// What the agent sees: distance to the episode maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub demand_gap: f64,
    pub coverage_gap: f64,
}

impl Observation {
    pub fn as_array(&self) -> [f64; 2] {
        [self.demand_gap, self.coverage_gap]
    }
}

/// Result of one placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    /// Demand collected this step (before weighting).
    pub demand_component: f64,
    /// Normalized new coverage this step (before weighting).
    pub coverage_component: f64,
}

/// Episode state for one agent on one grid.
#[derive(Debug, Clone)]
pub struct PlacementState {
    grid: DemandGrid,
    cfg: EnvConfig,
    placed: Vec<usize>,
    covered: Vec<bool>,
    collected: Vec<bool>,
    d_acc: f64,
    c_acc: f64,
    d_max: f64,
    c_max: f64,
}

impl PlacementState {
    /// Start an episode on a normalized grid.
    ///
    /// `D_max` is the sum of the `budget` largest cell demands; `C_max` is
    /// the budget itself, since each placement's normalized coverage gain is
    /// at most 1.
    pub fn reset(grid: &DemandGrid, cfg: &EnvConfig) -> Result<(Self, Observation)> {
        cfg.validate()?;
        grid.validate()?;
        if !grid.normalized {
            return Err(Error::UnnormalizedGrid);
        }
        let mut top: Vec<f64> = grid.demand.clone();
        top.sort_by(|a, b| b.total_cmp(a));
        let d_max = top[..cfg.budget.min(top.len())].iter().sum();
        let c_max = cfg.budget as f64;
        let state = Self {
            grid: grid.clone(),
            cfg: cfg.clone(),
            placed: Vec::with_capacity(cfg.budget),
            covered: vec![false; grid.cells()],
            collected: vec![false; grid.cells()],
            d_acc: 0.0,
            c_acc: 0.0,
            d_max,
            c_max,
        };
        let obs = state.observation();
        Ok((state, obs))
    }

    pub fn observation(&self) -> Observation {
        Observation {
            demand_gap: self.d_max - self.d_acc,
            coverage_gap: self.c_max - self.c_acc,
        }
    }

    /// Cells of the clipped coverage square around `cell` not yet covered.
    pub fn coverage_gain(&self, cell: usize, radius: usize) -> Result<usize> {
        let n = self.grid.n;
        if cell >= n * n {
            return Err(Error::CellOutOfRange { cell, n });
        }
        let mut gain = 0;
        for c in square_cells(n, cell, radius) {
            if !self.covered[c] {
                gain += 1;
            }
        }
        Ok(gain)
    }

    /// Place a charger on `action`.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.placed.len() >= self.cfg.budget {
            return Err(Error::EpisodeFinished(self.cfg.budget));
        }
        let n = self.grid.n;
        if action >= n * n {
            return Err(Error::CellOutOfRange { cell: action, n });
        }

        let exact_repeat = self.placed.contains(&action);
        let demand_component = if self.collected[action] {
            0.0
        } else {
            self.grid.demand[action]
        };
        self.collected[action] = true;

        let gain = self.coverage_gain(action, self.cfg.coverage_radius)?;
        let coverage_component = gain as f64 / self.cfg.coverage_area();
        for c in square_cells(n, action, self.cfg.coverage_radius) {
            self.covered[c] = true;
        }

        let mut reward =
            self.cfg.w_d * demand_component + self.cfg.w_c * coverage_component;
        if exact_repeat && demand_component == 0.0 && gain == 0 {
            reward -= self.cfg.duplicate_penalty;
        }

        self.d_acc += demand_component;
        self.c_acc += coverage_component;
        self.placed.push(action);

        if self.cfg.dynamic {
            // The placed charger earns the pre-decay demand.
            dynamic_decay(
                &mut self.grid,
                action,
                self.cfg.decay_f,
                self.cfg.decay_radius,
            )?;
        }

        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.placed.len() == self.cfg.budget,
            demand_component,
            coverage_component,
        })
    }

    pub fn placed(&self) -> &[usize] {
        &self.placed
    }

    pub fn covered(&self) -> &[bool] {
        &self.covered
    }

    pub fn steps(&self) -> usize {
        self.placed.len()
    }

    pub fn d_acc(&self) -> f64 {
        self.d_acc
    }

    pub fn c_acc(&self) -> f64 {
        self.c_acc
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn grid(&self) -> &DemandGrid {
        &self.grid
    }

    /// PGM heatmap with placed cells forced to maxval.
    pub fn placements_pgm(&self) -> String {
        let base = if self.grid.normalized {
            self.grid.demand.clone()
        } else {
            crate::demand::minmax_normalize(&self.grid).demand
        };
        let n = self.grid.n;
        crate::demand::grid_pgm(
            n,
            base.iter().enumerate().map(|(i, v)| {
                if self.placed.contains(&i) {
                    255
                } else {
                    (v * 255.0).round() as u32
                }
            }),
        )
    }
}

/// Indices of the grid-clipped (2r+1) x (2r+1) square around `cell`.
pub fn square_cells(n: usize, cell: usize, radius: usize) -> impl Iterator<Item = usize> {
    let row = cell / n;
    let col = cell % n;
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius).min(n - 1);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius).min(n - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| r * n + c))
}

/// Decay demand around `center`: every cell in the clipped (2r_d+1)^2 square
/// is multiplied by `1 - 1/(dist + f)`, with `dist` the Euclidean distance
/// between cell centers in cell units.
pub fn dynamic_decay(grid: &mut DemandGrid, center: usize, f: f64, r_d: usize) -> Result<()> {
    if !(f > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "decay_f {f} must be > 1"
        )));
    }
    let n = grid.n;
    if center >= n * n {
        return Err(Error::CellOutOfRange { cell: center, n });
    }
    let (crow, ccol) = (center / n, center % n);
    for cell in square_cells(n, center, r_d) {
        let (row, col) = (cell / n, cell % n);
        let dr = row.abs_diff(crow) as f64;
        let dc = col.abs_diff(ccol) as f64;
        let dist = (dr * dr + dc * dc).sqrt();
        grid.demand[cell] *= 1.0 - 1.0 / (dist + f);
    }
    Ok(())
}

/// One line of the episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub action: usize,
    pub reward: f64,
    pub demand_component: f64,
    pub coverage_component: f64,
    pub done: bool,
}

/// Write step records as JSON lines.
pub fn write_trace<W: Write>(mut w: W, records: &[StepRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| Error::Io {
            path: "<trace>".into(),
            source: e,
        })?;
    }
    Ok(())
}
