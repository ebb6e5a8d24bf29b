//! Exact best subset selection, identifiability margins and the
//! sufficient/necessary margin condition checkers.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::submatrix;
use crate::metric::{ComplexityReport, SolveMode};
use crate::model::{
    build_g_space, build_t_space, check_budget, collect_family, DesignMatrix, FamilyConstraint,
    LinearInstance, DEFAULT_BUDGET,
};
use crate::subset::{binomial, Combinations, ModelSubset};

/// RSS values within this fraction of `‖y‖²` of the minimum count as tied.
pub const RSS_TIE_TOL: f64 = 1e-13;

/// `log(e·x)`.
pub fn log_e(x: f64) -> f64 {
    1.0 + x.ln()
}

/// `log log(e·p)`, clamped at zero.
fn log_log_ep(p: usize) -> f64 {
    log_e(p as f64).ln().max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BssSolution {
    pub best: ModelSubset,
    pub rss: f64,
}

fn all_rss(
    instance: &LinearInstance,
    s_hat: usize,
    budget: u128,
) -> Result<Vec<(ModelSubset, f64)>> {
    let p = instance.p();
    if s_hat > p {
        return Err(Error::InvalidSpec(format!(
            "s_hat = {s_hat} exceeds p = {p}"
        )));
    }
    check_budget(binomial(p, s_hat), budget)?;
    let subsets: Vec<ModelSubset> = Combinations::new((0..p).collect(), s_hat)
        .map(ModelSubset::new)
        .collect();
    subsets
        .into_par_iter()
        .map(|d| {
            let r = instance.rss(&d)?;
            Ok((d, r))
        })
        .collect()
}

fn tie_tolerance(instance: &LinearInstance) -> f64 {
    RSS_TIE_TOL * instance.y.norm_squared()
}

/// Minimises the RSS over every size-`ŝ` subset; ties go to the
/// lexicographically smallest subset.
pub fn solve_exact(instance: &LinearInstance, s_hat: usize, budget: u128) -> Result<BssSolution> {
    let scored = all_rss(instance, s_hat, budget)?;
    let min = scored.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let cutoff = min + tie_tolerance(instance);
    let (best, rss) = scored
        .into_iter()
        .find(|(_, r)| *r <= cutoff)
        .expect("at least one subset");
    Ok(BssSolution { best, rss })
}

/// Every size-`ŝ` subset with `R_D ≤ min R + n·η·τ*`.
pub fn eta_solution_set(
    instance: &LinearInstance,
    s_hat: usize,
    eta: f64,
    tau_star: f64,
    budget: u128,
) -> Result<Vec<ModelSubset>> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidSpec(format!(
            "eta must lie in [0, 1), got {eta}"
        )));
    }
    let scored = all_rss(instance, s_hat, budget)?;
    let min = scored.iter().map(|(_, r)| *r).fold(f64::INFINITY, f64::min);
    let cutoff = min + instance.n() as f64 * eta * tau_star + tie_tolerance(instance);
    Ok(scored
        .into_iter()
        .filter(|(_, r)| *r <= cutoff)
        .map(|(d, _)| d)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginValue {
    pub value: f64,
    pub subset: ModelSubset,
}

/// `min_D ‖γ_D‖² / |D \ S|` over size-`ŝ` competitors with at least one
/// false inclusion.
pub fn tau_star(instance: &LinearInstance, s_hat: usize, budget: u128) -> Result<MarginValue> {
    let family = collect_family(
        instance.p(),
        s_hat,
        &instance.support,
        &FamilyConstraint::All,
        budget,
    )?;
    let values: Vec<Option<f64>> = family
        .par_iter()
        .map(|d| {
            let k = d.difference(&instance.support).len();
            if k == 0 {
                return Ok(None);
            }
            let g = instance.residualized_signal(d)?.gamma;
            Ok(Some(g.norm_squared() / k as f64))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<MarginValue> = None;
    for (d, v) in family.into_iter().zip(values) {
        if let Some(v) = v {
            if best.as_ref().is_none_or(|b| v < b.value) {
                best = Some(MarginValue {
                    value: v,
                    subset: d,
                });
            }
        }
    }
    best.ok_or_else(|| {
        Error::InvalidSpec(format!(
            "no competitor of size {s_hat} adds a false variable"
        ))
    })
}

/// `max_{j0 ∈ S} max_{D ∈ C_{j0}} ‖γ_D‖²`.
pub fn tau_hat(instance: &LinearInstance) -> Result<MarginValue> {
    let s = instance.s();
    let mut best: Option<MarginValue> = None;
    for j0 in instance.support.iter() {
        let family: Vec<ModelSubset> = crate::model::enumerate_family(
            instance.p(),
            s,
            &instance.support,
            &FamilyConstraint::LeaveOneOut(j0),
        )
        .collect();
        let values: Vec<f64> = family
            .par_iter()
            .map(|d| Ok(instance.residualized_signal(d)?.gamma.norm_squared()))
            .collect::<Result<_>>()?;
        for (d, v) in family.into_iter().zip(values) {
            if best.as_ref().is_none_or(|b| v > b.value) {
                best = Some(MarginValue {
                    value: v,
                    subset: d,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidSpec("no leave-one-out competitors: p equals s".into()))
}

/// Headline numbers of a [`ComplexityReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub label: String,
    pub size: usize,
    pub distinct_size: usize,
    /// Candidates whose residualized signal vanished.
    pub excluded: usize,
    pub min_sep: f64,
    pub diam: f64,
    pub entropy_complexity: f64,
    pub sudakov_complexity: f64,
    pub exact: bool,
}

impl SetSummary {
    pub fn from_report(r: &ComplexityReport, excluded: usize) -> Self {
        SetSummary {
            label: r.label.clone(),
            size: r.size,
            distinct_size: r.distinct_size,
            excluded,
            min_sep: r.min_sep,
            diam: r.diam,
            entropy_complexity: r.entropy_complexity,
            sudakov_complexity: r.sudakov_complexity,
            exact: r.is_exact(),
        }
    }
}

/// T and G complexities for one overlap `I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapComplexity {
    pub overlap: ModelSubset,
    pub s_hat: usize,
    pub t: SetSummary,
    pub g: SetSummary,
}

pub fn overlap_complexity(
    instance: &LinearInstance,
    overlap: &ModelSubset,
    s_hat: usize,
    budget: u128,
    mode: SolveMode,
) -> Result<OverlapComplexity> {
    let t = build_t_space(instance, overlap, s_hat, budget)?;
    let g = build_g_space(instance, overlap, s_hat, budget)?;
    let tr = t.space.complexity(mode)?;
    let gr = g.space.complexity(mode)?;
    Ok(OverlapComplexity {
        overlap: overlap.clone(),
        s_hat,
        t: SetSummary::from_report(&tr, t.excluded.len()),
        g: SetSummary::from_report(&gr, 0),
    })
}

/// Every proper subset of `truth` that can be the overlap of a size-`ŝ` model.
pub fn proper_overlaps(truth: &ModelSubset, s_hat: usize) -> Vec<ModelSubset> {
    let s = truth.len();
    (0..s.min(s_hat + 1))
        .flat_map(|k| Combinations::new(truth.indices().to_vec(), k).map(ModelSubset::new))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Scaled entropy integrals.
    Entropy,
    /// Diameters in place of the entropy integrals.
    Diameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientCheck {
    pub variant: Variant,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; infinite when the rhs vanishes.
    pub ratio: f64,
    pub satisfied: bool,
    pub max_t_sq: f64,
    pub max_g_sq: f64,
}

/// Right-hand side of the sufficient margin condition from precomputed
/// overlap complexities.
pub fn sufficient_rhs(
    per_overlap: &[OverlapComplexity],
    variant: Variant,
    c0: f64,
    eta: f64,
    sigma: f64,
    s: usize,
    p: usize,
    n: usize,
) -> (f64, f64, f64) {
    let pick = |x: &SetSummary| match variant {
        Variant::Entropy => x.entropy_complexity,
        Variant::Diameter => x.diam,
    };
    let max_t = per_overlap
        .iter()
        .map(|o| pick(&o.t).powi(2))
        .fold(0.0, f64::max);
    let max_g = per_overlap
        .iter()
        .map(|o| pick(&o.g).powi(2))
        .fold(0.0, f64::max);
    let log_ep = log_e(p as f64);
    let slack = (log_e(s as f64).max(log_log_ep(p)) / log_ep).sqrt();
    let rhs =
        c0 / (1.0 - eta).powi(2) * (max_t.max(max_g) + slack) * sigma * sigma * log_ep / n as f64;
    (rhs, max_t, max_g)
}

fn sufficient_check(
    tau: f64,
    per_overlap: &[OverlapComplexity],
    variant: Variant,
    cfg: &MarginConfig,
    instance: &LinearInstance,
) -> SufficientCheck {
    let (rhs, max_t_sq, max_g_sq) = sufficient_rhs(
        per_overlap,
        variant,
        cfg.c0,
        cfg.eta,
        instance.sigma,
        instance.s(),
        instance.p(),
        instance.n(),
    );
    SufficientCheck {
        variant,
        lhs: tau,
        rhs,
        ratio: ratio(tau, rhs),
        satisfied: tau >= rhs && tau > 0.0,
        max_t_sq,
        max_g_sq,
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// Constants and switches shared by the checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginConfig {
    pub c0: f64,
    pub c1: f64,
    pub c_alpha: f64,
    pub alpha: f64,
    /// Multiply the regime-b constant by the explicit `A_α` factor.
    pub fold_a_alpha: bool,
    pub eta: f64,
    pub budget: u128,
    pub mode: SolveMode,
}

impl Default for MarginConfig {
    fn default() -> Self {
        MarginConfig {
            c0: 1.0,
            c1: 1.0,
            c_alpha: 1.0,
            alpha: 0.5,
            fold_a_alpha: false,
            eta: 0.0,
            budget: DEFAULT_BUDGET,
            mode: SolveMode::Auto,
        }
    }
}

/// `(√(200/α² + 1) + 10√2/α)⁻¹`.
pub fn a_alpha(alpha: f64) -> f64 {
    1.0 / ((200.0 / (alpha * alpha) + 1.0).sqrt() + 10.0 * 2f64.sqrt() / alpha)
}

/// Checks the sufficient margin condition for `ŝ`-sparse competitors.
pub fn check_sufficient(
    instance: &LinearInstance,
    s_hat: usize,
    variant: Variant,
    cfg: &MarginConfig,
) -> Result<SufficientCheck> {
    if !(0.0..1.0).contains(&cfg.eta) {
        return Err(Error::InvalidSpec(format!(
            "eta must lie in [0, 1), got {}",
            cfg.eta
        )));
    }
    let tau = tau_star(instance, s_hat, cfg.budget)?.value;
    let per = proper_overlaps(&instance.support, s_hat)
        .iter()
        .map(|i| overlap_complexity(instance, i, s_hat, cfg.budget, cfg.mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(sufficient_check(tau, &per, variant, cfg, instance))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOutDiagnostics {
    pub j0: usize,
    pub overlap: ModelSubset,
    pub e_t: f64,
    pub e_t_star: f64,
    pub e_g: f64,
    pub e_g_star: f64,
    /// `ℰ*_G ∈ (ℰ*_T, ℰ_T)`.
    pub g_inside_t_window: bool,
    pub assumption2: bool,
    /// `ℰ*_T / ℰ_T`, NaN when `ℰ_T = 0`.
    pub condition1_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryReport {
    pub tau_hat: f64,
    pub tau_hat_subset: ModelSubset,
    pub regime: Regime,
    pub rhs_a: f64,
    pub rhs_b: Option<f64>,
    /// The rhs of the applicable regime.
    pub rhs: f64,
    pub ratio: f64,
    /// `τ̂ ≤ rhs`: the necessary condition is violated.
    pub below_rhs: bool,
    pub assumption2_ok: bool,
    pub assumption2_threshold: f64,
    pub condition1_ok: bool,
    pub per_j0: Vec<LeaveOneOutDiagnostics>,
    pub warnings: Vec<String>,
}

fn necessary_from(
    instance: &LinearInstance,
    tau: MarginValue,
    loo: &[OverlapComplexity],
    cfg: &MarginConfig,
) -> NecessaryReport {
    let (p, n, s) = (instance.p(), instance.n(), instance.s());
    let log_ep = log_e(p as f64);
    let threshold = 16.0 / log_ep;
    let mut per_j0 = Vec::new();
    for o in loo {
        let j0 = instance.support.difference(&o.overlap).indices()[0];
        let (e_t, e_t_star) = (o.t.entropy_complexity, o.t.sudakov_complexity);
        let e_g_star = o.g.sudakov_complexity;
        per_j0.push(LeaveOneOutDiagnostics {
            j0,
            overlap: o.overlap.clone(),
            e_t,
            e_t_star,
            e_g: o.g.entropy_complexity,
            e_g_star,
            g_inside_t_window: e_t_star < e_g_star && e_g_star < e_t,
            assumption2: e_g_star.powi(2) > threshold && e_t_star.powi(2) > threshold,
            condition1_ratio: if e_t > 0.0 { e_t_star / e_t } else { f64::NAN },
        });
    }
    let max_sq = per_j0
        .iter()
        .map(|d| d.e_t_star.powi(2).max(d.e_g_star.powi(2)))
        .fold(0.0, f64::max);
    let scale = instance.sigma.powi(2) * log_ep / n as f64;
    let regime = if per_j0.iter().any(|d| d.g_inside_t_window) {
        Regime::B
    } else {
        Regime::A
    };
    let condition1_ok = per_j0
        .iter()
        .all(|d| d.condition1_ratio > cfg.alpha && d.condition1_ratio < 1.0);
    let rhs_a = cfg.c1 * max_sq * scale;
    let b_const = if cfg.fold_a_alpha {
        cfg.c_alpha * a_alpha(cfg.alpha)
    } else {
        cfg.c_alpha
    };
    let rhs_b = (regime == Regime::B).then_some(b_const * max_sq * scale);
    let rhs = rhs_b.unwrap_or(rhs_a);
    let mut warnings = Vec::new();
    let floor = 16.0 * std::f64::consts::E.powi(3);
    if (p as f64) <= floor {
        warnings.push(format!("p = {p} does not exceed 16e^3 = {floor:.1}"));
    }
    if 2 * s >= p {
        warnings.push(format!("s = {s} is not below p/2"));
    }
    if regime == Regime::B && !condition1_ok {
        warnings.push(format!(
            "regularity ratio not within ({}, 1) for every j0",
            cfg.alpha
        ));
    }
    NecessaryReport {
        tau_hat: tau.value,
        tau_hat_subset: tau.subset,
        regime,
        rhs_a,
        rhs_b,
        rhs,
        ratio: ratio(tau.value, rhs),
        below_rhs: tau.value <= rhs,
        assumption2_ok: per_j0.iter().all(|d| d.assumption2),
        assumption2_threshold: threshold,
        condition1_ok,
        per_j0,
        warnings,
    }
}

fn leave_one_out_overlaps(truth: &ModelSubset) -> Vec<ModelSubset> {
    truth
        .iter()
        .map(|j0| truth.difference(&ModelSubset::new(vec![j0])))
        .collect()
}

/// Leave-one-out margin against the necessary-condition threshold.
pub fn check_necessary(instance: &LinearInstance, cfg: &MarginConfig) -> Result<NecessaryReport> {
    let tau = tau_hat(instance)?;
    let s = instance.s();
    let loo = leave_one_out_overlaps(&instance.support)
        .iter()
        .map(|i| overlap_complexity(instance, i, s, cfg.budget, cfg.mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(necessary_from(instance, tau, &loo, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Check {
    pub min_complexity: f64,
    pub argmin_overlap: ModelSubset,
    pub threshold: f64,
    pub ok: bool,
}

fn assumption1_from(per: &[OverlapComplexity], p_for_threshold: usize) -> Assumption1Check {
    let threshold = 1.0 / log_e(p_for_threshold as f64).sqrt();
    let (min_complexity, argmin_overlap) = per
        .iter()
        .map(|o| (o.g.entropy_complexity, o.overlap.clone()))
        .fold((f64::INFINITY, ModelSubset::empty()), |acc, x| {
            if x.0 < acc.0 {
                x
            } else {
                acc
            }
        });
    Assumption1Check {
        min_complexity,
        argmin_overlap,
        threshold,
        ok: min_complexity > threshold,
    }
}

/// `min_{I ⊊ S} ℰ_{G_I} > log(ep)^{-1/2}`. `threshold_p` substitutes the
/// dimension used in the threshold.
pub fn check_assumption1(
    instance: &LinearInstance,
    s_hat: usize,
    threshold_p: Option<usize>,
    cfg: &MarginConfig,
) -> Result<Assumption1Check> {
    let overlaps = proper_overlaps(&instance.support, s_hat);
    check_budget(overlaps.len() as u128, cfg.budget)?;
    let per = overlaps
        .iter()
        .map(|i| overlap_complexity(instance, i, s_hat, cfg.budget, cfg.mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(assumption1_from(&per, threshold_p.unwrap_or(instance.p())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrcParams {
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub psi: f64,
}

impl SrcParams {
    pub fn new(kappa_minus: f64, kappa_plus: f64, psi: f64) -> Result<Self> {
        if !(kappa_minus > 0.0 && kappa_minus <= kappa_plus && psi >= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < kappa_minus <= kappa_plus and psi >= 1, got ({kappa_minus}, {kappa_plus}, {psi})"
            )));
        }
        Ok(SrcParams {
            kappa_minus,
            kappa_plus,
            psi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrcCheck {
    pub support_size: usize,
    pub min_eig: f64,
    pub max_eig: f64,
    pub min_support: ModelSubset,
    pub ok: bool,
}

/// Extreme eigenvalues of `XᵀX/n` over supports of size `⌊Ψs⌋`. Smaller
/// supports are covered by eigenvalue interlacing.
pub fn check_src(
    design: &DesignMatrix,
    params: &SrcParams,
    s: usize,
    budget: u128,
) -> Result<SrcCheck> {
    let p = design.p();
    let k = ((params.psi * s as f64).floor() as usize).min(p);
    if k == 0 {
        return Err(Error::InvalidSpec("sparse support size is zero".into()));
    }
    check_budget(binomial(p, k), budget)?;
    let gram = design.gram();
    let supports: Vec<ModelSubset> = Combinations::new((0..p).collect(), k)
        .map(ModelSubset::new)
        .collect();
    let extremes: Vec<(f64, f64)> = supports
        .par_iter()
        .map(|d| {
            let eig = submatrix(&gram, d.indices(), d.indices())
                .symmetric_eigen()
                .eigenvalues;
            (eig.min(), eig.max())
        })
        .collect();
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut min_support = ModelSubset::empty();
    for (d, (lo, hi)) in supports.into_iter().zip(extremes) {
        if lo < min_eig {
            min_eig = lo;
            min_support = d;
        }
        max_eig = max_eig.max(hi);
    }
    Ok(SrcCheck {
        support_size: k,
        min_eig,
        max_eig,
        min_support,
        ok: min_eig >= params.kappa_minus && max_eig <= params.kappa_plus,
    })
}

/// Everything the checkers compute for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub s_hat: usize,
    pub sigma: f64,
    pub tau_star: f64,
    pub argmin_subset: ModelSubset,
    pub tau_hat: f64,
    pub per_overlap: Vec<OverlapComplexity>,
    pub sufficient: SufficientCheck,
    pub diameter_bound: SufficientCheck,
    pub sufficient_rhs: f64,
    pub necessary_rhs: f64,
    pub necessary: NecessaryReport,
    pub assumption1_ok: bool,
    pub assumption1: Assumption1Check,
    pub assumption2_ok: bool,
    pub condition1_alpha: f64,
    pub condition1_ok: bool,
    pub config: MarginConfig,
    pub conventions: String,
}

pub fn margin_report(
    instance: &LinearInstance,
    s_hat: usize,
    cfg: &MarginConfig,
) -> Result<MarginReport> {
    if !(0.0..1.0).contains(&cfg.eta) {
        return Err(Error::InvalidSpec(format!(
            "eta must lie in [0, 1), got {}",
            cfg.eta
        )));
    }
    let tau = tau_star(instance, s_hat, cfg.budget)?;
    let per = proper_overlaps(&instance.support, s_hat)
        .iter()
        .map(|i| overlap_complexity(instance, i, s_hat, cfg.budget, cfg.mode))
        .collect::<Result<Vec<_>>>()?;
    let sufficient = sufficient_check(tau.value, &per, Variant::Entropy, cfg, instance);
    let diameter_bound = sufficient_check(tau.value, &per, Variant::Diameter, cfg, instance);

    let s = instance.s();
    let loo_overlaps = leave_one_out_overlaps(&instance.support);
    let loo = loo_overlaps
        .iter()
        .map(
            |i| match per.iter().find(|o| o.overlap == *i && o.s_hat == s) {
                Some(o) => Ok(o.clone()),
                None => overlap_complexity(instance, i, s, cfg.budget, cfg.mode),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let necessary = necessary_from(instance, tau_hat(instance)?, &loo, cfg);
    let assumption1 = if s_hat == s {
        assumption1_from(&per, instance.p())
    } else {
        check_assumption1(instance, s, None, cfg)?
    };

    Ok(MarginReport {
        n: instance.n(),
        p: instance.p(),
        s,
        s_hat,
        sigma: instance.sigma,
        tau_star: tau.value,
        argmin_subset: tau.subset,
        tau_hat: necessary.tau_hat,
        per_overlap: per,
        sufficient_rhs: sufficient.rhs,
        sufficient,
        diameter_bound,
        necessary_rhs: necessary.rhs,
        assumption1_ok: assumption1.ok,
        assumption1,
        assumption2_ok: necessary.assumption2_ok,
        condition1_alpha: cfg.alpha,
        condition1_ok: necessary.condition1_ok,
        necessary,
        config: cfg.clone(),
        conventions: "internal covering, closed packing, natural logarithm".into(),
    })
}

/// `β` with value `b` on the first `s` coordinates.
pub fn planted_beta(p: usize, s: usize, b: f64) -> DVector<f64> {
    DVector::from_fn(p, |j, _| if j < s { b } else { 0.0 })
}
