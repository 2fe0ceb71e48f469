//! Deterministic parameter grids over the closed-form observables.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ThermoState};
use crate::thermo::ThermoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "beta")]
    Beta,
    T,
    #[serde(rename = "h")]
    H,
    J,
    #[serde(rename = "q")]
    Q,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Beta => "beta",
            Axis::T => "T",
            Axis::H => "h",
            Axis::J => "J",
            Axis::Q => "q",
        }
    }

    fn is_temperature(self) -> bool {
        matches!(self, Axis::Beta | Axis::T)
    }

    /// Replaces this axis' coordinate in `(params, state)`.
    pub fn apply(
        self,
        value: f64,
        params: ModelParams,
        state: ThermoState,
    ) -> Result<(ModelParams, ThermoState)> {
        let invalid = |e: Error| Error::InvalidGridPoint {
            axis: self.name(),
            value,
            reason: e.to_string(),
        };
        match self {
            Axis::Beta => Ok((params, ThermoState::from_beta(value).map_err(invalid)?)),
            Axis::T => Ok((
                params,
                ThermoState::from_temperature(value).map_err(invalid)?,
            )),
            Axis::H => Ok((params.with_field(value).map_err(invalid)?, state)),
            Axis::J => Ok((params.with_coupling(value).map_err(invalid)?, state)),
            Axis::Q => {
                if value.fract() != 0.0 || value < 0.0 || value > f64::from(u32::MAX) {
                    return Err(Error::InvalidGridPoint {
                        axis: "q",
                        value,
                        reason: "q must be an integer".into(),
                    });
                }
                Ok((params.with_q(value as u32).map_err(invalid)?, state))
            }
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(Axis::Beta),
            "T" => Ok(Axis::T),
            "h" => Ok(Axis::H),
            "J" => Ok(Axis::J),
            "q" => Ok(Axis::Q),
            other => Err(Error::InvalidGrid(format!(
                "unknown axis {other:?}, expected one of beta, T, h, J, q"
            ))),
        }
    }
}

/// Inclusive linear grid along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(axis: Axis, min: f64, max: f64, steps: usize) -> Result<Self> {
        let grid = Self {
            axis,
            min,
            max,
            steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min >= self.max {
            return Err(Error::InvalidGrid(format!(
                "need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 steps, got {}",
                self.steps
            )));
        }
        if self.axis == Axis::Q {
            if self.min.fract() != 0.0 || self.max.fract() != 0.0 || self.min < 2.0 {
                return Err(Error::InvalidGrid(
                    "q grid bounds must be integers >= 2".into(),
                ));
            }
            if self.steps as f64 > self.max - self.min + 1.0 {
                return Err(Error::InvalidGrid(format!(
                    "q grid [{}, {}] holds fewer than {} integers",
                    self.min, self.max, self.steps
                )));
            }
        }
        Ok(())
    }

    /// Point `i`; the last point is exactly `max`.
    pub fn point(&self, i: usize) -> f64 {
        let last = self.steps - 1;
        let value = if i >= last {
            self.max
        } else {
            self.min + (self.max - self.min) * (i as f64 / last as f64)
        };
        if self.axis == Axis::Q {
            value.round()
        } else {
            value
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.point(i)).collect()
    }

    /// Spacing between neighbouring points.
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.steps - 1) as f64
    }
}

/// The observables a sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "f")]
    FreeEnergy,
    #[serde(rename = "S")]
    Entropy,
    #[serde(rename = "m")]
    Magnetization,
    #[serde(rename = "chi")]
    Susceptibility,
    #[serde(rename = "C")]
    HeatCapacity,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::FreeEnergy => "f",
            Observable::Entropy => "S",
            Observable::Magnetization => "m",
            Observable::Susceptibility => "chi",
            Observable::HeatCapacity => "C",
        }
    }

    pub fn of(self, point: &ThermoPoint) -> f64 {
        match self {
            Observable::FreeEnergy => point.f,
            Observable::Entropy => point.s,
            Observable::Magnetization => point.m,
            Observable::Susceptibility => point.chi,
            Observable::HeatCapacity => point.c,
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(Observable::FreeEnergy),
            "S" => Ok(Observable::Entropy),
            "m" => Ok(Observable::Magnetization),
            "chi" => Ok(Observable::Susceptibility),
            "C" => Ok(Observable::HeatCapacity),
            other => Err(Error::InvalidGrid(format!(
                "unknown observable {other:?}, expected one of f, S, m, chi, C"
            ))),
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Grid coordinates, one per swept axis, in axis order.
    pub coords: Vec<f64>,
    pub params: ModelParams,
    pub state: ThermoState,
    pub point: ThermoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub params: ModelParams,
    pub state: ThermoState,
    pub grids: Vec<GridSpec>,
}

/// Rows in grid-index order; 2D tables are row-major with the first grid slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, observable: Observable) -> Vec<f64> {
        self.rows.iter().map(|r| observable.of(&r.point)).collect()
    }

    pub fn axes(&self) -> Vec<Axis> {
        self.metadata.grids.iter().map(|g| g.axis).collect()
    }
}

fn evaluate(
    coords: Vec<f64>,
    grids: &[GridSpec],
    params: ModelParams,
    state: ThermoState,
) -> Result<SweepRow> {
    let (params, state) = grids
        .iter()
        .zip(&coords)
        .try_fold((params, state), |(p, s), (g, &v)| g.axis.apply(v, p, s))?;
    Ok(SweepRow {
        point: ThermoPoint::evaluate(&params, state),
        coords,
        params,
        state,
    })
}

fn run(
    base_params: ModelParams,
    base_state: ThermoState,
    grids: Vec<GridSpec>,
    coords: Vec<Vec<f64>>,
) -> Result<SweepTable> {
    // Every slot is filled by index, so worker scheduling cannot reorder rows.
    let rows = coords
        .into_par_iter()
        .map(|c| evaluate(c, &grids, base_params, base_state))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        metadata: SweepMetadata {
            params: base_params,
            state: base_state,
            grids,
        },
        rows,
    })
}

/// Evaluates all five observables along one grid.
pub fn sweep_1d(
    base_params: &ModelParams,
    base_state: ThermoState,
    grid: &GridSpec,
) -> Result<SweepTable> {
    grid.validate()?;
    let coords = grid.points().into_iter().map(|x| vec![x]).collect();
    run(*base_params, base_state, vec![*grid], coords)
}

/// Evaluates the observables on the product grid, `grid_x` varying slowest.
pub fn sweep_2d(
    base_params: &ModelParams,
    base_state: ThermoState,
    grid_x: &GridSpec,
    grid_y: &GridSpec,
) -> Result<SweepTable> {
    grid_x.validate()?;
    grid_y.validate()?;
    if grid_x.axis == grid_y.axis || (grid_x.axis.is_temperature() && grid_y.axis.is_temperature())
    {
        return Err(Error::InvalidGrid(format!(
            "surface axes {} and {} overlap",
            grid_x.axis, grid_y.axis
        )));
    }
    let ys = grid_y.points();
    let coords = grid_x
        .points()
        .into_iter()
        .flat_map(|x| ys.iter().map(move |&y| vec![x, y]))
        .collect();
    run(*base_params, base_state, vec![*grid_x, *grid_y], coords)
}

/// Grid point with the largest value of `observable`; ties go to the lowest index.
pub fn find_peak(table: &SweepTable, observable: Observable) -> Result<(f64, f64)> {
    if table.metadata.grids.len() != 1 {
        return Err(Error::NotOneDimensional);
    }
    let mut best: Option<(f64, f64)> = None;
    for row in &table.rows {
        let value = observable.of(&row.point);
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((row.coords[0], value));
        }
    }
    best.ok_or(Error::EmptyTable)
}

/// Golden-section refinement of [`find_peak`] within one grid step either side.
pub fn refine_peak(table: &SweepTable, observable: Observable, tol: f64) -> Result<(f64, f64)> {
    let (coarse, _) = find_peak(table, observable)?;
    let grid = table.metadata.grids[0];
    if grid.axis == Axis::Q {
        return find_peak(table, observable);
    }
    let (params, state) = (table.metadata.params, table.metadata.state);
    let eval = |x: f64| -> Result<f64> {
        let (p, s) = grid.axis.apply(x, params, state)?;
        Ok(observable.of(&ThermoPoint::evaluate(&p, s)))
    };
    let step = grid.spacing();
    let (mut lo, mut hi) = ((coarse - step).max(grid.min), (coarse + step).min(grid.max));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    while hi - lo > tol * hi.abs().max(1.0) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = eval(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = eval(a)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, eval(x)?))
}

/// `ln lambda_max` minus its q-independent part, as a strictly increasing
/// key in `q`. Free energies of neighbouring `q` round to the same double at
/// low temperature; this key keeps them apart.
fn q_order_key(q: u32, exponent: f64) -> f64 {
    let x = 2.0 * exponent;
    let log_degeneracy = f64::from(q - 1).ln();
    if x > crate::transfer::LOG_BRANCH_THRESHOLD {
        return log_degeneracy + ((-x).exp() / f64::from(q - 1)).ln_1p();
    }
    // ln(ln(1 + e^z)), which tends to z for very negative z.
    let z = x + log_degeneracy;
    if z < -30.0 {
        z
    } else {
        z.exp().ln_1p().ln()
    }
}

/// True iff the free energy strictly decreases along `q_list` at every beta of the grid.
pub fn q_ordering_check(
    beta_grid: &GridSpec,
    h: f64,
    coupling: f64,
    q_list: &[u32],
) -> Result<bool> {
    beta_grid.validate()?;
    if !beta_grid.axis.is_temperature() {
        return Err(Error::InvalidGrid(format!(
            "q ordering runs over beta or T, got {}",
            beta_grid.axis
        )));
    }
    if q_list.iter().any(|&q| q < 2) || q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidQList);
    }
    let models = q_list
        .iter()
        .map(|&q| ModelParams::new(q, coupling, h))
        .collect::<Result<Vec<_>>>()?;
    let probe = ModelParams::new(2, coupling, h)?;
    let unit = ThermoState::from_beta(1.0)?;
    for x in beta_grid.points() {
        let (_, state) = beta_grid.axis.apply(x, probe, unit)?;
        let keys: Vec<f64> = models
            .iter()
            .map(|p| q_order_key(p.q(), p.bond_exponent(state)))
            .collect();
        if keys.windows(2).any(|w| w[1] <= w[0]) {
            return Ok(false);
        }
    }
    Ok(true)
}
