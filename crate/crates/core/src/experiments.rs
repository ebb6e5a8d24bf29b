//! Seeded Monte Carlo harnesses for the recovery trend, the T/G complexity
//! curves on block designs, the dominance map over `(c, r)` and the
//! concentration bands of the block-design closed forms.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bss::{overlap_complexity, planted_beta, solve_exact, tau_star};
use crate::designs::{
    band_epsilon, block_is_positive_definite, closed_form, tau_ratio_interval, DesignKind,
    DesignSpec, MAX_SIGNAL_CORRELATION,
};
use crate::error::{Error, Result};
use crate::metric::SolveMode;
use crate::model::{LinearInstance, DEFAULT_BUDGET};
use crate::rng::derive_seed;
use crate::subset::ModelSubset;

/// Required pass rate per cell in the closed-form validation.
pub const CELL_PASS_RATE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Recovery,
    Complexity,
    CrPlane,
    ClosedForm,
}

fn default_c() -> Vec<f64> {
    vec![0.0]
}
fn default_one() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_budget() -> u128 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_c")]
    pub c_values: Vec<f64>,
    pub r_values: Vec<f64>,
    /// Ties `c` to `r` in every cell.
    #[serde(default)]
    pub equicorrelated: bool,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_one_usize")]
    pub s: usize,
    /// Model size searched by BSS; defaults to `s`.
    #[serde(default)]
    pub s_hat: Option<usize>,
    #[serde(default = "default_one")]
    pub beta_value: f64,
    #[serde(default = "default_one")]
    pub sigma: f64,
    pub reps: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// `L` in the T-band `L·ε`.
    #[serde(default = "default_one")]
    pub t_band: f64,
    /// `M` in the G-band `M·ε`.
    #[serde(default = "default_one")]
    pub g_band: f64,
    #[serde(default = "default_budget")]
    pub budget: u128,
    #[serde(default)]
    pub mode: SolveMode,
    /// Record wall-clock time per row; off by default to keep output reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn default_one_usize() -> usize {
    1
}

impl ExperimentConfig {
    /// Scaled recovery setting: `p = 200, n = 400, s = 1, β₁ = 0.1, σ = 1`.
    pub fn recovery_default(base_seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Recovery,
            c_values: vec![0.0],
            r_values: vec![0.0, 0.3, 0.6, 0.9],
            equicorrelated: false,
            n: 400,
            p: 200,
            s: 1,
            s_hat: None,
            beta_value: 0.1,
            sigma: 1.0,
            reps: 100,
            base_seed,
            normalize: true,
            t_band: 1.0,
            g_band: 1.0,
            budget: DEFAULT_BUDGET,
            mode: SolveMode::Auto,
            timing: false,
        }
    }

    /// Block-design concentration setting at `n = 4000, p = 50`.
    pub fn closed_form_default(
        c_values: Vec<f64>,
        r_values: Vec<f64>,
        seeds: usize,
        base_seed: u64,
    ) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::ClosedForm,
            c_values,
            r_values,
            n: 4000,
            p: 50,
            beta_value: 1.0,
            sigma: 0.0,
            reps: seeds,
            ..ExperimentConfig::recovery_default(base_seed)
        }
    }

    pub fn s_hat(&self) -> usize {
        self.s_hat.unwrap_or(self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidSpec("reps must be at least 1".into()));
        }
        if self.r_values.is_empty() || (!self.equicorrelated && self.c_values.is_empty()) {
            return Err(Error::InvalidSpec("the (c, r) grid is empty".into()));
        }
        if self.s == 0 || self.s > self.p {
            return Err(Error::InvalidSpec(format!(
                "need 1 <= s <= p, got s = {}, p = {}",
                self.s, self.p
            )));
        }
        if self.s_hat() == 0 || self.s_hat() >= self.p {
            return Err(Error::InvalidSpec(format!(
                "need 1 <= s_hat < p, got {}",
                self.s_hat()
            )));
        }
        if self.beta_value == 0.0 || !self.beta_value.is_finite() {
            return Err(Error::InvalidSpec(
                "beta_value must be nonzero: s >= 1 requires a signal".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        let needs_single = matches!(
            self.experiment,
            ExperimentKind::Complexity | ExperimentKind::ClosedForm | ExperimentKind::CrPlane
        );
        if needs_single && (self.s != 1 || self.s_hat() != 1) {
            return Err(Error::InvalidSpec(
                "complexity experiments use s = s_hat = 1".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(f64, f64)> {
        if self.equicorrelated {
            self.r_values.iter().map(|&r| (r, r)).collect()
        } else {
            self.c_values
                .iter()
                .flat_map(|&c| self.r_values.iter().map(move |&r| (c, r)))
                .collect()
        }
    }

    fn design_spec(&self, c: f64, r: f64, seed: u64) -> Result<DesignSpec> {
        let kind = if self.equicorrelated {
            DesignKind::Equicorrelated { r }
        } else {
            DesignKind::Block { c, r }
        };
        Ok(DesignSpec::new(kind, self.p, seed)?.normalized(self.normalize))
    }

    fn feasible(&self, c: f64, r: f64) -> bool {
        (0.0..1.0).contains(&r)
            && (0.0..=MAX_SIGNAL_CORRELATION).contains(&c)
            && block_is_positive_definite(self.p, c, r)
    }
}

/// Seed of one replicate; keyed by the cell's values so growing the grid
/// leaves existing cells unchanged.
pub fn cell_seed(base: u64, c: f64, r: f64, rep: usize) -> u64 {
    derive_seed(base, &[c.to_bits(), r.to_bits(), rep as u64])
}

/// One replicate of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub c: f64,
    pub r: f64,
    pub rep: usize,
    pub seed: u64,
    pub recovered: Option<u8>,
    pub tau_star: Option<f64>,
    pub tau_ratio: Option<f64>,
    pub e_t: Option<f64>,
    pub e_g: Option<f64>,
    pub e_t_star: Option<f64>,
    pub e_g_star: Option<f64>,
    pub d_t: Option<f64>,
    pub diam_t: Option<f64>,
    pub d_g: Option<f64>,
    pub diam_g: Option<f64>,
    pub pred_e_t_sq: f64,
    pub pred_e_g_sq: f64,
    pub pred_tau_ratio: f64,
    pub tau_ok: Option<u8>,
    pub t_ok: Option<u8>,
    pub g_ok: Option<u8>,
    pub runtime_ms: Option<f64>,
}

/// Header of the per-replicate CSV.
pub const ROW_HEADER: &[&str] = &[
    "c",
    "r",
    "rep",
    "seed",
    "recovered",
    "tau_star",
    "tau_ratio",
    "e_t",
    "e_g",
    "e_t_star",
    "e_g_star",
    "d_t",
    "diam_t",
    "d_g",
    "diam_g",
    "pred_e_t_sq",
    "pred_e_g_sq",
    "pred_tau_ratio",
    "tau_ok",
    "t_ok",
    "g_ok",
    "runtime_ms",
];

impl ExperimentRow {
    fn blank(c: f64, r: f64, rep: usize, seed: u64) -> Self {
        let pred = closed_form(c, r);
        ExperimentRow {
            c,
            r,
            rep,
            seed,
            recovered: None,
            tau_star: None,
            tau_ratio: None,
            e_t: None,
            e_g: None,
            e_t_star: None,
            e_g_star: None,
            d_t: None,
            diam_t: None,
            d_g: None,
            diam_g: None,
            pred_e_t_sq: pred.e_t_sq,
            pred_e_g_sq: pred.e_g_sq,
            pred_tau_ratio: pred.tau_ratio,
            tau_ok: None,
            t_ok: None,
            g_ok: None,
            runtime_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryPoint {
    pub c: f64,
    pub r: f64,
    pub reps: usize,
    pub recovered: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    pub c: f64,
    pub r: f64,
    pub e_t: f64,
    pub e_g: f64,
    pub e_t_star: f64,
    pub e_g_star: f64,
    pub pred_e_t: f64,
    pub pred_e_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    TDominates,
    GDominates,
    /// The closed forms are within one band of each other.
    Indeterminate,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCell {
    pub c: f64,
    pub r: f64,
    pub status: CellStatus,
    /// Mean measured `ℰ_T − ℰ_G`.
    pub diff: Option<f64>,
    /// `√(pred ℰ_T²) − √(pred ℰ_G²)`.
    pub pred_diff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationCell {
    pub c: f64,
    pub r: f64,
    pub seeds: usize,
    pub tau_pass: usize,
    pub t_pass: usize,
    pub g_pass: usize,
    pub all_pass: usize,
    pub pass_rate: f64,
    /// Smallest signed slack seen; negative means outside the band.
    pub worst_tau_margin: f64,
    pub worst_t_margin: f64,
    pub worst_g_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    Recovery {
        points: Vec<RecoveryPoint>,
    },
    Complexity {
        points: Vec<ComplexityPoint>,
    },
    CrPlane {
        band: f64,
        cells: Vec<PlaneCell>,
    },
    ClosedForm {
        band: f64,
        cells: Vec<ValidationCell>,
        passed: bool,
    },
}

impl Summary {
    /// False only for a failed closed-form validation.
    pub fn passed(&self) -> bool {
        match self {
            Summary::ClosedForm { passed, .. } => *passed,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub summary: Summary,
    #[serde(skip)]
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentOutput {
    pub fn write_rows_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(ROW_HEADER)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary table as CSV; columns depend on the experiment.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        match &self.summary {
            Summary::Recovery { points } => points.iter().try_for_each(|p| w.serialize(p))?,
            Summary::Complexity { points } => points.iter().try_for_each(|p| w.serialize(p))?,
            Summary::CrPlane { cells, .. } => cells.iter().try_for_each(|p| w.serialize(p))?,
            Summary::ClosedForm { cells, .. } => cells.iter().try_for_each(|p| w.serialize(p))?,
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the experiment named in the config.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::Recovery => recovery_curve(config),
        ExperimentKind::Complexity => complexity_curve(config),
        ExperimentKind::CrPlane => cr_plane(config),
        ExperimentKind::ClosedForm => closed_form_validation(config),
    }
}

/// Runs `f` on every `(cell, rep)` of the feasible cells in parallel; rows
/// come back in `(cell, rep)` order.
fn replicate<F>(config: &ExperimentConfig, cells: &[(f64, f64)], f: F) -> Result<Vec<ExperimentRow>>
where
    F: Fn(&DesignSpec, &mut ExperimentRow) -> Result<()> + Sync,
{
    let tasks: Vec<(f64, f64, usize)> = cells
        .iter()
        .flat_map(|&(c, r)| (0..config.reps).map(move |rep| (c, r, rep)))
        .collect();
    tasks
        .par_iter()
        .map(|&(c, r, rep)| {
            let seed = cell_seed(config.base_seed, c, r, rep);
            let start = Instant::now();
            let mut row = ExperimentRow::blank(c, r, rep, seed);
            let spec = config.design_spec(c, r, seed)?;
            f(&spec, &mut row)?;
            if config.timing {
                row.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            Ok(row)
        })
        .collect()
}

fn feasible_cells(config: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let cells = config.cells();
    if let Some(&(c, r)) = cells.iter().find(|&&(c, r)| !config.feasible(c, r)) {
        config.design_spec(c, r, 0)?;
        return Err(Error::InvalidSpec(format!(
            "cell (c = {c}, r = {r}) is infeasible"
        )));
    }
    Ok(cells)
}

/// Exact-BSS recovery frequency per cell under Gaussian noise.
pub fn recovery_curve(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let cells = feasible_cells(config)?;
    let beta = planted_beta(config.p, config.s, config.beta_value);
    let s_hat = config.s_hat();
    let rows = replicate(config, &cells, |spec, row| {
        let design = spec.sample(config.n)?;
        let inst = LinearInstance::with_noise(
            design,
            beta.clone(),
            config.sigma,
            derive_seed(row.seed, &[1]),
        )?;
        let sol = solve_exact(&inst, s_hat, config.budget)?;
        row.recovered = Some(u8::from(sol.best == inst.support));
        let tau = tau_star(&inst, s_hat, config.budget)?.value;
        row.tau_star = Some(tau);
        row.tau_ratio = Some(tau / (config.beta_value * config.beta_value));
        Ok(())
    })?;
    let points = cells
        .iter()
        .enumerate()
        .map(|(k, &(c, r))| {
            let chunk = &rows[k * config.reps..(k + 1) * config.reps];
            let recovered = chunk.iter().filter(|row| row.recovered == Some(1)).count();
            RecoveryPoint {
                c,
                r,
                reps: config.reps,
                recovered,
                rate: recovered as f64 / config.reps as f64,
            }
        })
        .collect();
    Ok(ExperimentOutput {
        config: config.clone(),
        summary: Summary::Recovery { points },
        rows,
    })
}

fn measure_complexity(
    config: &ExperimentConfig,
    spec: &DesignSpec,
    row: &mut ExperimentRow,
) -> Result<()> {
    let design = spec.sample(config.n)?;
    let beta = planted_beta(config.p, 1, config.beta_value);
    let inst = LinearInstance::noiseless(design, beta)?;
    let oc = overlap_complexity(&inst, &ModelSubset::empty(), 1, config.budget, config.mode)?;
    row.e_t = Some(oc.t.entropy_complexity);
    row.e_g = Some(oc.g.entropy_complexity);
    row.e_t_star = Some(oc.t.sudakov_complexity);
    row.e_g_star = Some(oc.g.sudakov_complexity);
    row.d_t = Some(oc.t.min_sep);
    row.diam_t = Some(oc.t.diam);
    row.d_g = Some(oc.g.min_sep);
    row.diam_g = Some(oc.g.diam);
    let tau = tau_star(&inst, 1, config.budget)?.value;
    row.tau_star = Some(tau);
    row.tau_ratio = Some(tau / (config.beta_value * config.beta_value));
    Ok(())
}

fn mean(rows: &[ExperimentRow], field: impl Fn(&ExperimentRow) -> Option<f64>) -> f64 {
    rows.iter().filter_map(field).sum::<f64>() / rows.len() as f64
}

/// `ℰ_T` and `ℰ_G` at overlap `∅` per cell, next to their closed forms.
pub fn complexity_curve(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let cells = feasible_cells(config)?;
    let rows = replicate(config, &cells, |spec, row| {
        measure_complexity(config, spec, row)
    })?;
    let points = cells
        .iter()
        .enumerate()
        .map(|(k, &(c, r))| {
            let chunk = &rows[k * config.reps..(k + 1) * config.reps];
            let pred = closed_form(c, r);
            ComplexityPoint {
                c,
                r,
                e_t: mean(chunk, |x| x.e_t),
                e_g: mean(chunk, |x| x.e_g),
                e_t_star: mean(chunk, |x| x.e_t_star),
                e_g_star: mean(chunk, |x| x.e_g_star),
                pred_e_t: pred.e_t_sq.sqrt(),
                pred_e_g: pred.e_g_sq.sqrt(),
            }
        })
        .collect();
    Ok(ExperimentOutput {
        config: config.clone(),
        summary: Summary::Complexity { points },
        rows,
    })
}

/// Linear interpolation of the first sign change of `e_t − e_g` along `r`.
pub fn empirical_crossing(points: &[ComplexityPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0].e_t - w[0].e_g, w[1].e_t - w[1].e_g);
        if a < 0.0 && b >= 0.0 {
            Some(w[0].r + (w[1].r - w[0].r) * (-a) / (b - a))
        } else {
            None
        }
    })
}

/// Which complexity dominates on each `(c, r)` cell.
pub fn cr_plane(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let band = band_epsilon(config.n, config.p);
    let all = config.cells();
    let feasible: Vec<(f64, f64)> = all
        .iter()
        .copied()
        .filter(|&(c, r)| config.feasible(c, r))
        .collect();
    let rows = replicate(config, &feasible, |spec, row| {
        measure_complexity(config, spec, row)
    })?;
    let mut k = 0;
    let cells = all
        .iter()
        .map(|&(c, r)| {
            if !config.feasible(c, r) {
                return PlaneCell {
                    c,
                    r,
                    status: CellStatus::Infeasible,
                    diff: None,
                    pred_diff: None,
                };
            }
            let chunk = &rows[k * config.reps..(k + 1) * config.reps];
            k += 1;
            let pred = closed_form(c, r);
            let diff = mean(chunk, |x| Some(x.e_t? - x.e_g?));
            let status = if (pred.e_t_sq - pred.e_g_sq).abs() < band {
                CellStatus::Indeterminate
            } else if diff > 0.0 {
                CellStatus::TDominates
            } else {
                CellStatus::GDominates
            };
            PlaneCell {
                c,
                r,
                status,
                diff: Some(diff),
                pred_diff: Some(pred.e_t_sq.sqrt() - pred.e_g_sq.sqrt()),
            }
        })
        .collect();
    Ok(ExperimentOutput {
        config: config.clone(),
        summary: Summary::CrPlane { band, cells },
        rows,
    })
}

/// Signed slack of `[lo, hi] ⊇ {a, b}`.
fn band_slack(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (a.min(b) - lo).min(hi - a.max(b))
}

/// Checks the margin interval and the T/G separation/diameter bands on
/// every sampled design.
pub fn closed_form_validation(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let cells = feasible_cells(config)?;
    let eps = band_epsilon(config.n, config.p);
    let rows = replicate(config, &cells, |spec, row| {
        measure_complexity(config, spec, row)?;
        let (lo, hi) = tau_ratio_interval(row.c, eps);
        let tr = row.tau_ratio.unwrap_or(f64::NAN);
        let lt = config.t_band * eps;
        let lg = config.g_band * eps;
        let (dt, big_t) = (
            row.d_t.unwrap_or(f64::NAN).powi(2),
            row.diam_t.unwrap_or(f64::NAN).powi(2),
        );
        let (dg, big_g) = (
            row.d_g.unwrap_or(f64::NAN).powi(2),
            row.diam_g.unwrap_or(f64::NAN).powi(2),
        );
        let tau_slack = band_slack(lo, hi, tr, tr);
        let t_slack = band_slack(
            (row.pred_e_t_sq - lt).max(0.0),
            row.pred_e_t_sq + lt,
            dt,
            big_t,
        );
        let g_slack = band_slack(
            (row.pred_e_g_sq - lg).max(0.0),
            row.pred_e_g_sq + lg,
            dg,
            big_g,
        );
        row.tau_ok = Some(u8::from(tau_slack >= 0.0));
        row.t_ok = Some(u8::from(t_slack >= 0.0));
        row.g_ok = Some(u8::from(g_slack >= 0.0));
        Ok(())
    })?;
    let cells: Vec<ValidationCell> = cells
        .iter()
        .enumerate()
        .map(|(k, &(c, r))| {
            let chunk = &rows[k * config.reps..(k + 1) * config.reps];
            let count = |f: &dyn Fn(&ExperimentRow) -> bool| chunk.iter().filter(|x| f(x)).count();
            let all_pass =
                count(&|x| x.tau_ok == Some(1) && x.t_ok == Some(1) && x.g_ok == Some(1));
            let (lo, hi) = tau_ratio_interval(c, eps);
            let pred = closed_form(c, r);
            let lt = config.t_band * eps;
            let lg = config.g_band * eps;
            let worst = |f: &dyn Fn(&ExperimentRow) -> f64| {
                chunk.iter().map(f).fold(f64::INFINITY, f64::min)
            };
            let pass_rate = all_pass as f64 / config.reps as f64;
            ValidationCell {
                c,
                r,
                seeds: config.reps,
                tau_pass: count(&|x| x.tau_ok == Some(1)),
                t_pass: count(&|x| x.t_ok == Some(1)),
                g_pass: count(&|x| x.g_ok == Some(1)),
                all_pass,
                pass_rate,
                worst_tau_margin: worst(&|x| {
                    let v = x.tau_ratio.unwrap_or(f64::NAN);
                    band_slack(lo, hi, v, v)
                }),
                worst_t_margin: worst(&|x| {
                    band_slack(
                        (pred.e_t_sq - lt).max(0.0),
                        pred.e_t_sq + lt,
                        x.d_t.unwrap_or(f64::NAN).powi(2),
                        x.diam_t.unwrap_or(f64::NAN).powi(2),
                    )
                }),
                worst_g_margin: worst(&|x| {
                    band_slack(
                        (pred.e_g_sq - lg).max(0.0),
                        pred.e_g_sq + lg,
                        x.d_g.unwrap_or(f64::NAN).powi(2),
                        x.diam_g.unwrap_or(f64::NAN).powi(2),
                    )
                }),
                passed: pass_rate >= CELL_PASS_RATE,
            }
        })
        .collect();
    let passed = cells.iter().all(|c| c.passed);
    Ok(ExperimentOutput {
        config: config.clone(),
        summary: Summary::ClosedForm {
            band: eps,
            cells,
            passed,
        },
        rows,
    })
}
