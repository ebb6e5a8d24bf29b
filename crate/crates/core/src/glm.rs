//! Exponential-family regression: restricted MLEs, KL projections, the
//! KL and natural-parameter margins, reweighted designs and GLM subset
//! selection.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Bernoulli, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bss::{log_e, proper_overlaps, OverlapComplexity, SetSummary};
use crate::error::{Error, Result};
use crate::linalg::{
    orthonormal_basis, residual_basis, select_columns, SubspaceBasis, DEFAULT_RANK_TOL,
};
use crate::metric::{space_from_subspaces, space_from_vectors, SolveMode};
use crate::model::{check_budget, collect_family, DesignMatrix, FamilyConstraint, DEFAULT_BUDGET};
use crate::rng::{normal_vector, stream_rng};
use crate::subset::{binomial, Combinations, ModelSubset};

const GRAD_TOL: f64 = 1e-10;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 50;
/// Default bound on `‖β̂‖₂` beyond which the MLE is declared nonexistent.
pub const DEFAULT_NORM_CAP: f64 = 1e3;
/// Curvature below this counts as a saturated (separated) fit.
const SATURATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum GlmFamily {
    /// Gaussian responses with noise level `sigma`.
    Linear {
        sigma: f64,
    },
    Logistic,
}

impl GlmFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::Linear { .. } => "linear",
            GlmFamily::Logistic => "logistic",
        }
    }

    /// Cumulant function.
    pub fn b(&self, u: f64) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 0.5 * u * u,
            GlmFamily::Logistic => {
                if u > 0.0 {
                    u + (-u).exp().ln_1p()
                } else {
                    u.exp().ln_1p()
                }
            }
        }
    }

    pub fn b_prime(&self, u: f64) -> f64 {
        match self {
            GlmFamily::Linear { .. } => u,
            GlmFamily::Logistic => {
                if u >= 0.0 {
                    1.0 / (1.0 + (-u).exp())
                } else {
                    let e = u.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    pub fn b_double_prime(&self, u: f64) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 1.0,
            GlmFamily::Logistic => {
                let m = self.b_prime(u);
                m * (1.0 - m)
            }
        }
    }

    pub fn b_triple_prime(&self, u: f64) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 0.0,
            GlmFamily::Logistic => {
                let m = self.b_prime(u);
                m * (1.0 - m) * (1.0 - 2.0 * m)
            }
        }
    }

    /// Lower bound on `b″` over `|u| ≤ ω`.
    pub fn psi(&self, omega: f64) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 1.0,
            GlmFamily::Logistic => 1.0 / (3.0 + omega.exp()),
        }
    }

    /// `φ`.
    pub fn dispersion(&self) -> f64 {
        match self {
            GlmFamily::Linear { sigma } => sigma * sigma,
            GlmFamily::Logistic => 1.0,
        }
    }

    /// `B ≥ sup b″`.
    pub fn curvature_bound(&self) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 1.0,
            GlmFamily::Logistic => 0.25,
        }
    }

    /// `B̃ ≥ sup |b‴|`.
    pub fn third_bound(&self) -> f64 {
        match self {
            GlmFamily::Linear { .. } => 0.0,
            GlmFamily::Logistic => 1.0 / (6.0 * 3f64.sqrt()),
        }
    }
}

/// Constants bounding the design, coefficients and curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    /// `max_i ‖x_i‖_∞`
    pub x0: f64,
    /// `‖β*‖₁`
    pub r0: f64,
    /// `max_D max_i |x_{i,D}ᵀβ̄_D| / x0`
    pub r: f64,
    /// Smallest `λ_min(X_DᵀX_D/n)` over size-`s` supports.
    pub kappa0: f64,
    /// Upper bound on the third-moment tensor norm over size-`s` supports.
    pub m: f64,
}

#[derive(Debug, Clone)]
pub struct GlmInstance {
    pub design: DesignMatrix,
    pub beta_star: DVector<f64>,
    pub support: ModelSubset,
    pub family: GlmFamily,
    pub y: DVector<f64>,
    pub regularity: Option<Regularity>,
    pub norm_cap: f64,
}

/// Outcome of a Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf: f64,
}

impl GlmInstance {
    pub fn new(
        design: DesignMatrix,
        beta_star: DVector<f64>,
        family: GlmFamily,
        y: DVector<f64>,
    ) -> Result<Self> {
        if beta_star.len() != design.p() {
            return Err(Error::DimensionMismatch {
                context: "GlmInstance beta",
                expected: design.p(),
                found: beta_star.len(),
            });
        }
        if y.len() != design.n() {
            return Err(Error::DimensionMismatch {
                context: "GlmInstance y",
                expected: design.n(),
                found: y.len(),
            });
        }
        if let GlmFamily::Linear { sigma } = family {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "sigma must be finite and >= 0, got {sigma}"
                )));
            }
        }
        if family == GlmFamily::Logistic && y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidInput(
                "logistic responses must be 0 or 1".into(),
            ));
        }
        let support = ModelSubset::new(
            (0..beta_star.len())
                .filter(|&j| beta_star[j] != 0.0)
                .collect(),
        );
        if support.is_empty() {
            return Err(Error::InvalidSpec("beta has no nonzero entries".into()));
        }
        Ok(GlmInstance {
            design,
            beta_star,
            support,
            family,
            y,
            regularity: None,
            norm_cap: DEFAULT_NORM_CAP,
        })
    }

    /// Draws the response from the model with the seeded stream.
    pub fn simulate(
        design: DesignMatrix,
        beta_star: DVector<f64>,
        family: GlmFamily,
        seed: u64,
    ) -> Result<Self> {
        if beta_star.len() != design.p() {
            return Err(Error::DimensionMismatch {
                context: "GlmInstance beta",
                expected: design.p(),
                found: beta_star.len(),
            });
        }
        let eta = design.matrix() * &beta_star;
        let y = match family {
            GlmFamily::Linear { sigma } => {
                let noise = DVector::from_vec(normal_vector(seed, 0, design.n()));
                eta + noise * sigma
            }
            GlmFamily::Logistic => {
                let mut rng = stream_rng(seed, 0);
                DVector::from_iterator(
                    eta.len(),
                    eta.iter().map(|&u| {
                        let coin =
                            Bernoulli::new(family.b_prime(u)).expect("probability in [0, 1]");
                        if coin.sample(&mut rng) {
                            1.0
                        } else {
                            0.0
                        }
                    }),
                )
            }
        };
        GlmInstance::new(design, beta_star, family, y)
    }

    pub fn with_regularity(mut self, reg: Regularity) -> Self {
        self.regularity = Some(reg);
        self
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    /// `X_S β*_S`.
    pub fn true_predictor(&self) -> DVector<f64> {
        self.design.matrix() * &self.beta_star
    }

    /// `(2/n) Σ_i {−y_i x_{i,D}ᵀβ̃ + b(x_{i,D}ᵀβ̃)}`.
    pub fn neg_loglik(&self, d: &ModelSubset, coef: &DVector<f64>) -> Result<f64> {
        let eta = self.design.apply(d, coef)?;
        Ok(objective(&self.family, &eta, &self.y))
    }

    /// Gradient of [`GlmInstance::neg_loglik`].
    pub fn gradient(&self, d: &ModelSubset, coef: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.design.columns(d)?;
        let eta = &x * coef;
        Ok(gradient(&self.family, &x, &eta, &self.y))
    }

    /// Restricted maximum likelihood estimate on `d`.
    pub fn mle(&self, d: &ModelSubset) -> Result<FitReport> {
        let x = self.design.columns(d)?;
        newton(&self.family, &x, &self.y, self.norm_cap)
    }

    fn kl_targets(&self) -> DVector<f64> {
        self.true_predictor().map(|u| self.family.b_prime(u))
    }

    /// KL projection of the true model onto `d`.
    pub fn beta_bar(&self, d: &ModelSubset) -> Result<DVector<f64>> {
        if *d == self.support {
            return Ok(DVector::from_iterator(
                d.len(),
                d.iter().map(|j| self.beta_star[j]),
            ));
        }
        self.beta_bar_fit(d).map(|f| DVector::from_vec(f.coef))
    }

    /// Newton solve for the KL projection, without the `D = S` shortcut.
    pub fn beta_bar_fit(&self, d: &ModelSubset) -> Result<FitReport> {
        let x = self.design.columns(d)?;
        newton(&self.family, &x, &self.kl_targets(), self.norm_cap)
    }

    /// Linear predictor `X_D β̄_D`.
    pub fn projected_predictor(&self, d: &ModelSubset) -> Result<DVector<f64>> {
        self.design.apply(d, &self.beta_bar(d)?)
    }

    pub fn delta_kl(&self, d: &ModelSubset) -> Result<f64> {
        let bar = self.projected_predictor(d)?;
        Ok(self.delta_kl_from(&bar))
    }

    fn delta_kl_from(&self, bar: &DVector<f64>) -> f64 {
        let star = self.true_predictor();
        let f = &self.family;
        let total: f64 = bar
            .iter()
            .zip(star.iter())
            .map(|(&u, &v)| f.b(u) - f.b(v) - (u - v) * f.b_prime(v))
            .sum();
        (2.0 * total / self.n() as f64).max(0.0)
    }

    pub fn delta_par(&self, d: &ModelSubset) -> Result<f64> {
        let bar = self.projected_predictor(d)?;
        Ok(self.delta_par_from(&bar))
    }

    fn delta_par_from(&self, bar: &DVector<f64>) -> f64 {
        (self.true_predictor() - bar).norm_squared() / self.n() as f64
    }

    /// `Λ_D^{1/2} X_D` with `Λ_D = diag(b″(X_D β̄_D))`.
    pub fn tilde_design(&self, d: &ModelSubset) -> Result<DMatrix<f64>> {
        let bar = self.projected_predictor(d)?;
        let mut x = self.design.columns(d)?;
        for (i, &u) in bar.iter().enumerate() {
            x.row_mut(i).scale_mut(self.family.b_double_prime(u).sqrt());
        }
        Ok(x)
    }

    /// Regularity constants estimated from the data over size-`s` supports.
    pub fn estimate_regularity(&self, budget: u128) -> Result<Regularity> {
        let (n, p, s) = (self.n(), self.p(), self.s());
        check_budget(binomial(p, s), budget)?;
        let x = self.design.matrix();
        let x0 = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let r0 = self.beta_star.iter().map(|v| v.abs()).sum();
        let gram = self.design.gram();
        let supports: Vec<ModelSubset> = Combinations::new((0..p).collect(), s)
            .map(ModelSubset::new)
            .collect();
        let per: Vec<(f64, f64, f64)> = supports
            .par_iter()
            .map(|d| {
                let g = crate::linalg::submatrix(&gram, d.indices(), d.indices());
                let lmin = g.symmetric_eigen().eigenvalues.min();
                let third = (0..n)
                    .map(|i| d.iter().map(|j| x[(i, j)].powi(2)).sum::<f64>().powf(1.5))
                    .sum::<f64>()
                    / n as f64;
                let reach = if *d == self.support {
                    0.0
                } else {
                    self.projected_predictor(d)?.amax()
                };
                Ok((lmin, third, reach))
            })
            .collect::<Result<_>>()?;
        let kappa0 = per.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        let m = per.iter().map(|t| t.1).fold(0.0, f64::max);
        let reach = per.iter().map(|t| t.2).fold(0.0, f64::max);
        Ok(Regularity {
            x0,
            r0,
            r: if x0 > 0.0 { reach / x0 } else { 0.0 },
            kappa0,
            m,
        })
    }

    pub fn to_document(&self, design_ref: Option<String>) -> GlmDocument {
        GlmDocument {
            n: self.n(),
            p: self.p(),
            beta: self.beta_star.iter().cloned().collect(),
            support: self.support.clone(),
            family: self.family,
            y: self.y.iter().cloned().collect(),
            design_ref,
        }
    }

    pub fn from_document(doc: &GlmDocument, design: DesignMatrix) -> Result<Self> {
        if design.n() != doc.n || design.p() != doc.p {
            return Err(Error::InvalidInput(format!(
                "document expects a {}x{} design, got {}x{}",
                doc.n,
                doc.p,
                design.n(),
                design.p()
            )));
        }
        GlmInstance::new(
            design,
            DVector::from_vec(doc.beta.clone()),
            doc.family,
            DVector::from_vec(doc.y.clone()),
        )
    }
}

/// On-disk form of a [`GlmInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmDocument {
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
    pub support: ModelSubset,
    #[serde(flatten)]
    pub family: GlmFamily,
    pub y: Vec<f64>,
    pub design_ref: Option<String>,
}

fn objective(f: &GlmFamily, eta: &DVector<f64>, target: &DVector<f64>) -> f64 {
    let n = eta.len() as f64;
    2.0 / n
        * eta
            .iter()
            .zip(target.iter())
            .map(|(&u, &t)| f.b(u) - t * u)
            .sum::<f64>()
}

fn gradient(
    f: &GlmFamily,
    x: &DMatrix<f64>,
    eta: &DVector<f64>,
    target: &DVector<f64>,
) -> DVector<f64> {
    let n = eta.len() as f64;
    let resid = DVector::from_iterator(
        eta.len(),
        eta.iter()
            .zip(target.iter())
            .map(|(&u, &t)| f.b_prime(u) - t),
    );
    x.transpose() * resid * (2.0 / n)
}

fn hessian(f: &GlmFamily, x: &DMatrix<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
    let n = eta.len() as f64;
    let mut weighted = x.clone();
    for (i, &u) in eta.iter().enumerate() {
        weighted.row_mut(i).scale_mut(f.b_double_prime(u));
    }
    x.transpose() * weighted * (2.0 / n)
}

/// Damped Newton minimisation of `(2/n) Σ {b(x_iᵀβ) − t_i x_iᵀβ}` from zero.
fn newton(f: &GlmFamily, x: &DMatrix<f64>, target: &DVector<f64>, cap: f64) -> Result<FitReport> {
    let k = x.ncols();
    let mut coef = DVector::zeros(k);
    if k == 0 {
        return Ok(FitReport {
            coef: Vec::new(),
            iterations: 0,
            converged: true,
            grad_inf: 0.0,
        });
    }
    let mut eta = x * &coef;
    let mut obj = objective(f, &eta, target);
    let mut grad = gradient(f, x, &eta, target);
    let mut iterations = 0;
    while grad.amax() > GRAD_TOL && iterations < MAX_ITER {
        iterations += 1;
        let h = hessian(f, x, &eta);
        let step = h
            .cholesky()
            .ok_or_else(|| {
                Error::NotPositiveDefinite(
                    "Hessian is singular; design columns are collinear".into(),
                )
            })?
            .solve(&(-&grad));
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &coef + &step * scale;
            let cand_eta = x * &cand;
            let cand_obj = objective(f, &cand_eta, target);
            if cand_obj <= obj + 4.0 * f64::EPSILON * obj.abs() {
                coef = cand;
                eta = cand_eta;
                obj = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        let norm = coef.norm();
        if norm > cap {
            return Err(Error::MleDoesNotExist { norm, cap });
        }
        grad = gradient(f, x, &eta, target);
        if !accepted {
            break;
        }
    }
    if *f == GlmFamily::Logistic && eta.iter().any(|&u| f.b_double_prime(u) < SATURATION) {
        return Err(Error::MleDoesNotExist {
            norm: coef.norm(),
            cap,
        });
    }
    let grad_inf = grad.amax();
    Ok(FitReport {
        coef: coef.iter().cloned().collect(),
        iterations,
        converged: grad_inf <= GRAD_TOL,
        grad_inf,
    })
}

/// Settings for [`glm_margins`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlmConfig {
    /// Leading constant of the sufficient condition.
    pub c: f64,
    pub eta: f64,
    pub budget: u128,
    pub mode: SolveMode,
}

impl Default for GlmConfig {
    fn default() -> Self {
        GlmConfig {
            c: 1.0,
            eta: 0.0,
            budget: DEFAULT_BUDGET,
            mode: SolveMode::Auto,
        }
    }
}

/// Per-candidate margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMargin {
    pub subset: ModelSubset,
    pub delta_kl: f64,
    pub delta_par: f64,
    pub false_inclusions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmMarginReport {
    pub family: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub tau_tilde_star: f64,
    pub argmin_subset: ModelSubset,
    pub per_overlap: Vec<OverlapComplexity>,
    pub regularity: Regularity,
    pub psi_star: f64,
    pub psi_star_star: f64,
    pub t1: f64,
    pub t2: f64,
    pub complexity_term: f64,
    /// `φ·B·C/(1−η)²·max{complexity_term, t1, t2}·log(ep)/n`
    pub sufficient_rhs: f64,
    pub ratio: f64,
    pub satisfied: bool,
    /// `ψ(x0(R0+R))·Δ_par ≤ Δ_kl ≤ B·Δ_par` on every candidate.
    pub sandwich_ok: bool,
    pub candidates: Vec<CandidateMargin>,
}

/// `τ̃*`, T̃/G̃ complexities and the sufficient-condition check for size-`s`
/// competitors.
pub fn glm_margins(instance: &GlmInstance, cfg: &GlmConfig) -> Result<GlmMarginReport> {
    if !(0.0..1.0).contains(&cfg.eta) {
        return Err(Error::InvalidSpec(format!(
            "eta must lie in [0, 1), got {}",
            cfg.eta
        )));
    }
    let (n, p, s) = (instance.n(), instance.p(), instance.s());
    let family = collect_family(p, s, &instance.support, &FamilyConstraint::All, cfg.budget)?;
    let predictors: Vec<DVector<f64>> = family
        .par_iter()
        .map(|d| instance.projected_predictor(d))
        .collect::<Result<_>>()?;
    let candidates: Vec<CandidateMargin> = family
        .iter()
        .zip(&predictors)
        .map(|(d, bar)| CandidateMargin {
            subset: d.clone(),
            delta_kl: instance.delta_kl_from(bar),
            delta_par: instance.delta_par_from(bar),
            false_inclusions: d.difference(&instance.support).len(),
        })
        .collect();
    let (tau, argmin) = candidates
        .iter()
        .filter(|c| c.false_inclusions > 0)
        .map(|c| (c.delta_kl / c.false_inclusions as f64, c.subset.clone()))
        .fold((f64::INFINITY, ModelSubset::empty()), |acc, x| {
            if x.0 < acc.0 {
                x
            } else {
                acc
            }
        });
    if !tau.is_finite() {
        return Err(Error::InvalidSpec(
            "no competitor adds a false variable".into(),
        ));
    }

    let regularity = match instance.regularity {
        Some(r) => r,
        None => instance.estimate_regularity(cfg.budget)?,
    };
    let fam = instance.family;
    let Regularity {
        x0,
        r0,
        r,
        kappa0,
        m,
    } = regularity;
    let psi_star = fam.psi(x0 * r).min(fam.psi(x0 * r0));
    let psi_star_star = fam.psi(x0 * r + x0 * r0);
    let sandwich_ok = candidates.iter().all(|c| {
        let slack = 1e-12 * c.delta_par.max(1e-300);
        psi_star_star * c.delta_par <= c.delta_kl + slack
            && c.delta_kl <= fam.curvature_bound() * c.delta_par + slack
    });

    let star = instance.true_predictor();
    let per_overlap = proper_overlaps(&instance.support, s)
        .iter()
        .map(|i| tilde_overlap(instance, i, &family, &predictors, &star, cfg.mode))
        .collect::<Result<Vec<_>>>()?;

    let log_ep = log_e(p as f64);
    let spread = log_e(s as f64).max(log_ep.ln().max(0.0));
    let slack = (spread / log_ep).sqrt();
    let max_sq = per_overlap
        .iter()
        .map(|o| {
            o.t.entropy_complexity
                .powi(2)
                .max(o.g.entropy_complexity.powi(2))
        })
        .fold(0.0, f64::max);
    let complexity_term = max_sq + slack;
    let (phi, b, bt) = (fam.dispersion(), fam.curvature_bound(), fam.third_bound());
    let t1 = (1.0 / psi_star - 1.0 / b) * s as f64 * spread / log_ep;
    let log_p = (p as f64).ln();
    let log_n = (n as f64).ln();
    let sf = s as f64;
    let t2 = if bt == 0.0 || log_p <= 0.0 {
        0.0
    } else {
        bt.powi(2) * m.powi(2) * x0.powi(4) * phi.powi(2) * b.powi(2)
            / (kappa0 * psi_star * psi_star_star.powi(4))
            * sf.powi(2)
            * log_n.powi(2)
            / (n as f64 * log_p)
            + bt * m * x0.powi(3) * phi.powf(1.5) * b.powf(1.5) / 6.0
                * sf.powf(1.5)
                * log_n.powf(1.5)
                / ((n as f64).sqrt() * log_p)
    };
    let rhs = phi * b * cfg.c / (1.0 - cfg.eta).powi(2) * complexity_term.max(t1).max(t2) * log_ep
        / n as f64;
    Ok(GlmMarginReport {
        family: fam.name().into(),
        n,
        p,
        s,
        tau_tilde_star: tau,
        argmin_subset: argmin,
        per_overlap,
        regularity,
        psi_star,
        psi_star_star,
        t1,
        t2,
        complexity_term,
        sufficient_rhs: rhs,
        ratio: if rhs > 0.0 { tau / rhs } else { f64::INFINITY },
        satisfied: tau >= rhs && tau > 0.0,
        sandwich_ok,
        candidates,
    })
}

fn tilde_overlap(
    instance: &GlmInstance,
    overlap: &ModelSubset,
    family: &[ModelSubset],
    predictors: &[DVector<f64>],
    star: &DVector<f64>,
    mode: SolveMode,
) -> Result<OverlapComplexity> {
    let zero_tol = 1e-10 * star.norm();
    let members: Vec<usize> = (0..family.len())
        .filter(|&k| family[k].intersection(&instance.support) == *overlap)
        .collect();
    let mut points = Vec::new();
    let mut excluded = 0;
    for &k in &members {
        let diff = &predictors[k] - star;
        let norm = diff.norm();
        if norm > zero_tol {
            points.push(diff / norm);
        } else {
            excluded += 1;
        }
    }
    let t_space = space_from_vectors(&points, format!("T~[{overlap}]"))?;
    let bases: Vec<SubspaceBasis> = members
        .par_iter()
        .map(|&k| {
            let d = &family[k];
            let xt = instance.tilde_design(d)?;
            let inner_pos = d.positions_of(overlap).expect("overlap inside candidate");
            let extra_pos = d
                .positions_of(&d.difference(overlap))
                .expect("subset of candidate");
            let full = orthonormal_basis(&xt, DEFAULT_RANK_TOL);
            let inner = orthonormal_basis(&select_columns(&xt, &inner_pos), DEFAULT_RANK_TOL);
            residual_basis(
                &full,
                &inner,
                &select_columns(&xt, &extra_pos),
                DEFAULT_RANK_TOL,
            )
        })
        .collect::<Result<_>>()?;
    let g_space = space_from_subspaces(&bases, format!("G~[{overlap}]"))?;
    Ok(OverlapComplexity {
        overlap: overlap.clone(),
        s_hat: instance.s(),
        t: SetSummary::from_report(&t_space.complexity(mode)?, excluded),
        g: SetSummary::from_report(&g_space.complexity(mode)?, 0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmSolution {
    pub best: ModelSubset,
    pub loss: f64,
    pub coef: Vec<f64>,
}

/// Minimises the fitted negative log-likelihood over size-`ŝ` subsets;
/// ties go to the lexicographically smallest subset.
pub fn glm_solve_exact(instance: &GlmInstance, s_hat: usize, budget: u128) -> Result<GlmSolution> {
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
    let fits: Vec<(f64, Vec<f64>)> = subsets
        .par_iter()
        .map(|d| {
            let fit = instance.mle(d)?;
            let coef = DVector::from_vec(fit.coef.clone());
            Ok((instance.neg_loglik(d, &coef)?, fit.coef))
        })
        .collect::<Result<_>>()?;
    let min = fits.iter().map(|f| f.0).fold(f64::INFINITY, f64::min);
    let cutoff = min + 1e-12 * min.abs().max(1.0);
    let k = fits
        .iter()
        .position(|f| f.0 <= cutoff)
        .expect("at least one subset");
    Ok(GlmSolution {
        best: subsets[k].clone(),
        loss: fits[k].0,
        coef: fits[k].1.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bss::{planted_beta, tau_star};
    use crate::designs::DesignSpec;
    use crate::model::LinearInstance;
    use nalgebra::dvector;

    fn subset(v: &[usize]) -> ModelSubset {
        ModelSubset::new(v.to_vec())
    }

    fn logistic_instance(n: usize, p: usize, seed: u64) -> GlmInstance {
        let design = DesignSpec::block(p, 0.3, 0.3, seed)
            .unwrap()
            .sample(n)
            .unwrap();
        let mut beta = DVector::zeros(p);
        beta[0] = 1.0;
        beta[1] = -0.8;
        GlmInstance::simulate(design, beta, GlmFamily::Logistic, seed + 1).unwrap()
    }

    #[test]
    fn family_functions() {
        let lg = GlmFamily::Logistic;
        assert!((lg.b(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((lg.b_double_prime(0.0) - 0.25).abs() < 1e-15);
        assert!(lg.b(800.0).is_finite() && lg.b(-800.0) >= 0.0);
        for k in -400..=400 {
            let u = k as f64 / 20.0;
            for f in [lg, GlmFamily::Linear { sigma: 1.0 }] {
                assert!(f.b_double_prime(u) >= 0.0);
                assert!(f.b_double_prime(u) <= f.curvature_bound() + 1e-15);
                assert!(f.b_triple_prime(u).abs() <= f.third_bound() + 1e-15);
                assert!(f.psi(u.abs()) <= f.b_double_prime(u) + 1e-15);
            }
            // derivative checks by central differences
            let h = 1e-5;
            assert!(((lg.b(u + h) - lg.b(u - h)) / (2.0 * h) - lg.b_prime(u)).abs() < 1e-8);
        }
    }

    #[test]
    fn neg_loglik_examples() {
        let inst = logistic_instance(40, 3, 1);
        let d = subset(&[0, 2]);
        assert!((inst.neg_loglik(&d, &DVector::zeros(2)).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);

        let design = DesignSpec::independent(3, 4).sample(30).unwrap();
        let lin = GlmInstance::simulate(
            design,
            dvector![1.0, 0.0, 0.5],
            GlmFamily::Linear { sigma: 1.0 },
            2,
        )
        .unwrap();
        let (a, b) = (dvector![0.3, -0.2], dvector![1.1, 0.4]);
        let x = lin.design.columns(&d).unwrap();
        let n = lin.n() as f64;
        let lhs = lin.neg_loglik(&d, &a).unwrap() - lin.neg_loglik(&d, &b).unwrap();
        let rhs = ((&lin.y - &x * &a).norm_squared() - (&lin.y - &x * &b).norm_squared()) / n;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn linear_mle_is_least_squares() {
        let design = DesignSpec::independent(4, 9).sample(50).unwrap();
        let inst = GlmInstance::simulate(
            design,
            dvector![1.0, -1.0, 0.0, 0.0],
            GlmFamily::Linear { sigma: 0.5 },
            3,
        )
        .unwrap();
        let d = subset(&[0, 1, 3]);
        let fit = inst.mle(&d).unwrap();
        assert_eq!(fit.iterations, 1);
        let x = inst.design.columns(&d).unwrap();
        let ls = (x.transpose() * &x)
            .cholesky()
            .unwrap()
            .solve(&(x.transpose() * &inst.y));
        for (a, b) in fit.coef.iter().zip(ls.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn logistic_mle_symmetric_data_is_zero() {
        let x = DesignMatrix::from_rows(4, 1, &[1.0, -1.0, 2.0, -2.0]).unwrap();
        let inst = GlmInstance::new(
            x,
            dvector![1.0],
            GlmFamily::Logistic,
            dvector![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let fit = inst.mle(&subset(&[0])).unwrap();
        // x·y and x·(1−y) balance exactly
        let x = DesignMatrix::from_rows(4, 1, &[1.0, -1.0, 1.0, -1.0]).unwrap();
        let sym = GlmInstance::new(
            x,
            dvector![1.0],
            GlmFamily::Logistic,
            dvector![1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(sym.mle(&subset(&[0])).unwrap().coef, vec![0.0]);
        assert!(fit.converged);
    }

    #[test]
    fn logistic_mle_gradient_vanishes() {
        let inst = logistic_instance(200, 4, 5);
        let d = subset(&[0, 2]);
        let fit = inst.mle(&d).unwrap();
        assert!(fit.converged && fit.grad_inf <= 1e-10);
        let g = inst.gradient(&d, &DVector::from_vec(fit.coef)).unwrap();
        assert!(g.amax() <= 1e-10);
    }

    #[test]
    fn separation_is_reported() {
        let x = DesignMatrix::from_rows(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]).unwrap();
        let inst = GlmInstance::new(
            x,
            dvector![1.0],
            GlmFamily::Logistic,
            dvector![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            inst.mle(&subset(&[0])),
            Err(Error::MleDoesNotExist { .. })
        ));
    }

    #[test]
    fn beta_bar_examples() {
        let inst = logistic_instance(50, 3, 11);
        let bar = inst.beta_bar(&inst.support).unwrap();
        assert_eq!(bar, dvector![1.0, -0.8]);
        let newton = inst.beta_bar_fit(&inst.support).unwrap();
        assert!((DVector::from_vec(newton.coef) - dvector![1.0, -0.8]).amax() < 1e-8);

        let fit = inst.beta_bar_fit(&subset(&[0, 2])).unwrap();
        assert!(fit.grad_inf <= 1e-9);
        // concavity of the KL objective: the Hessian of its negative is PSD
        let x = inst.design.columns(&subset(&[0, 2])).unwrap();
        let eta = &x * DVector::from_vec(fit.coef);
        let h = hessian(&inst.family, &x, &eta);
        assert!(h.symmetric_eigen().eigenvalues.min() > 0.0);

        let design = DesignSpec::independent(4, 2).sample(30).unwrap();
        let lin = GlmInstance::simulate(
            design,
            dvector![1.0, 0.7, 0.0, 0.0],
            GlmFamily::Linear { sigma: 1.0 },
            1,
        )
        .unwrap();
        let d = subset(&[0, 3]);
        let proj = lin.design.basis(&d).unwrap();
        let target = crate::linalg::project(&proj, &lin.true_predictor()).unwrap();
        assert!((lin.projected_predictor(&d).unwrap() - target).amax() < 1e-8);
    }

    #[test]
    fn delta_examples() {
        let r2 = 2f64.sqrt();
        let x = DesignMatrix::from_rows(2, 3, &[r2, 0.0, 1.0, 0.0, r2, 1.0]).unwrap();
        let lin = GlmInstance::new(
            x,
            dvector![1.0, 0.0, 0.0],
            GlmFamily::Linear { sigma: 1.0 },
            dvector![r2, 0.0],
        )
        .unwrap();
        assert_eq!(lin.delta_kl(&subset(&[0])).unwrap(), 0.0);
        assert!((lin.delta_kl(&subset(&[2])).unwrap() - 0.5).abs() < 1e-12);
        assert!((lin.delta_par(&subset(&[2])).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(lin.delta_par(&subset(&[0])).unwrap(), 0.0);

        let inst = logistic_instance(300, 5, 2);
        let d = subset(&[0, 3]);
        let kl = inst.delta_kl(&d).unwrap();
        let par = inst.delta_par(&d).unwrap();
        assert!(par > 0.0 && kl > 0.0);
        let reg = inst.estimate_regularity(DEFAULT_BUDGET).unwrap();
        let psi = inst.family.psi(reg.x0 * (reg.r0 + reg.r));
        assert!(psi * par <= kl && kl <= 0.25 * par);
    }

    #[test]
    fn tilde_design_examples() {
        let design = DesignSpec::independent(3, 3).sample(10).unwrap();
        let lin = GlmInstance::simulate(
            design.clone(),
            dvector![1.0, 0.0, 0.0],
            GlmFamily::Linear { sigma: 1.0 },
            0,
        )
        .unwrap();
        let d = subset(&[1, 2]);
        assert_eq!(lin.tilde_design(&d).unwrap(), design.columns(&d).unwrap());

        // the KL projection of a zero-signal target onto a balanced design is zero
        let x =
            DesignMatrix::from_rows(4, 2, &[1.0, 0.5, -1.0, -0.5, 1.0, -0.5, -1.0, 0.5]).unwrap();
        let lg = GlmInstance::new(
            x.clone(),
            dvector![0.0, 1.0],
            GlmFamily::Logistic,
            dvector![1.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let lg = GlmInstance {
            beta_star: dvector![1e-300, 0.0],
            ..lg
        };
        let xt = lg.tilde_design(&subset(&[1])).unwrap();
        let raw = x.columns(&subset(&[1])).unwrap();
        assert!((xt - raw * 0.5).amax() < 1e-12);

        let inst = logistic_instance(100, 4, 8);
        let xt = inst.tilde_design(&subset(&[1, 3])).unwrap();
        let raw = inst.design.columns(&subset(&[1, 3])).unwrap();
        for i in 0..100 {
            let w = if raw[(i, 0)] != 0.0 {
                xt[(i, 0)] / raw[(i, 0)]
            } else {
                0.5
            };
            assert!(w > 0.0 && w <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn linear_family_degenerates_to_linear_quantities() {
        for seed in 0..10u64 {
            let design = DesignSpec::block(7, 0.4, 0.3, seed)
                .unwrap()
                .sample(25)
                .unwrap();
            let beta = planted_beta(7, 2, 0.9);
            let lin = LinearInstance::with_noise(design.clone(), beta.clone(), 1.0, seed).unwrap();
            let glm = GlmInstance::new(
                design,
                beta,
                GlmFamily::Linear { sigma: 1.0 },
                lin.y.clone(),
            )
            .unwrap();
            let report = glm_margins(&glm, &GlmConfig::default()).unwrap();
            let ts = tau_star(&lin, 2, DEFAULT_BUDGET).unwrap();
            assert!((report.tau_tilde_star - ts.value).abs() <= 1e-8 * ts.value.max(1e-12));
            assert_eq!(report.t1, 0.0);
            assert_eq!(report.t2, 0.0);
            for o in &report.per_overlap {
                let lin_o = crate::bss::overlap_complexity(
                    &lin,
                    &o.overlap,
                    2,
                    DEFAULT_BUDGET,
                    SolveMode::Auto,
                )
                .unwrap();
                assert!((o.t.entropy_complexity - lin_o.t.entropy_complexity).abs() < 1e-8);
                assert!((o.g.entropy_complexity - lin_o.g.entropy_complexity).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn logistic_margins_respect_invariants() {
        let inst = logistic_instance(300, 8, 21);
        let report = glm_margins(&inst, &GlmConfig::default()).unwrap();
        assert!(report.sandwich_ok);
        assert!(report.tau_tilde_star > 0.0);
        assert!(!report.candidates.iter().any(|c| c.subset == inst.support));
        for o in &report.per_overlap {
            for set in [&o.t, &o.g] {
                assert!(set.min_sep <= set.entropy_complexity + 1e-12);
                assert!(set.entropy_complexity <= set.diam + 1e-12);
                assert!(set.sudakov_complexity <= set.entropy_complexity + 1e-12);
            }
        }
        assert!(report.t1 > 0.0 && report.t2 > 0.0);
    }

    #[test]
    fn glm_bss_recovers_strong_signal() {
        let design = DesignSpec::independent(6, 14).sample(400).unwrap();
        let mut beta = DVector::zeros(6);
        beta[1] = 2.0;
        beta[4] = -2.0;
        let inst = GlmInstance::simulate(design, beta, GlmFamily::Logistic, 15).unwrap();
        assert_eq!(
            glm_solve_exact(&inst, 2, DEFAULT_BUDGET).unwrap().best,
            subset(&[1, 4])
        );
    }

    #[test]
    fn document_round_trip() {
        let inst = logistic_instance(20, 3, 4);
        let doc = inst.to_document(None);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"family\":\"logistic\""));
        let back: GlmDocument = serde_json::from_str(&text).unwrap();
        let again = GlmInstance::from_document(&back, inst.design.clone()).unwrap();
        assert_eq!(again.y, inst.y);
    }
}
