//! Linear regression instances, candidate families, residualized signals and
//! the T/G metric spaces built from them.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    orthonormal_basis, residual, residual_basis, select_columns, SubspaceBasis, DEFAULT_RANK_TOL,
};
use crate::metric::{space_from_subspaces, space_from_vectors, FiniteMetricSpace};
use crate::rng::normal_vector;
use crate::subset::{binomial, Combinations, ModelSubset};

/// Default cap on the number of subsets any single enumeration may touch.
pub const DEFAULT_BUDGET: u128 = 2_000_000;
/// Relative threshold under which a residualized signal counts as zero.
pub const ZERO_SIGNAL_TOL: f64 = 1e-10;
const NORMALIZE_TOL: f64 = 1e-9;

/// An `n × p` design with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    normalized: bool,
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "design contains non-finite entry {v}"
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidInput("design has no rows".into()));
        }
        Ok(DesignMatrix {
            x,
            normalized: false,
        })
    }

    /// Row-major constructor.
    pub fn from_rows(n: usize, p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::DimensionMismatch {
                context: "DesignMatrix::from_rows",
                expected: n * p,
                found: data.len(),
            });
        }
        DesignMatrix::new(DMatrix::from_row_slice(n, p, data))
    }

    /// Rescales every column to squared norm `n`.
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.n() as f64;
        for j in 0..self.p() {
            let norm = self.x.column(j).norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "column {j} is identically zero"
                )));
            }
            self.x.column_mut(j).scale_mut(n.sqrt() / norm);
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Whether every column has `‖X_j‖² / n` within `1e-9` of one.
    pub fn check_normalized(&self) -> bool {
        let n = self.n() as f64;
        (0..self.p()).all(|j| (self.x.column(j).norm_squared() / n - 1.0).abs() <= NORMALIZE_TOL)
    }

    /// Sample covariance `XᵀX / n`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.x.transpose() * &self.x / self.n() as f64
    }

    pub fn columns(&self, d: &ModelSubset) -> Result<DMatrix<f64>> {
        self.check_subset(d)?;
        Ok(select_columns(&self.x, d.indices()))
    }

    /// Orthonormal basis of `col(X_D)`.
    pub fn basis(&self, d: &ModelSubset) -> Result<SubspaceBasis> {
        let cols = self.columns(d)?;
        Ok(orthonormal_basis(&cols, DEFAULT_RANK_TOL).with_source(d.clone()))
    }

    /// `X_D b` for coefficients indexed by `d`.
    pub fn apply(&self, d: &ModelSubset, coef: &DVector<f64>) -> Result<DVector<f64>> {
        if coef.len() != d.len() {
            return Err(Error::DimensionMismatch {
                context: "DesignMatrix::apply",
                expected: d.len(),
                found: coef.len(),
            });
        }
        Ok(self.columns(d)? * coef)
    }

    pub fn check_subset(&self, d: &ModelSubset) -> Result<()> {
        match d.max_index() {
            Some(j) if j >= self.p() => Err(Error::InvalidInput(format!(
                "subset {d} out of range for p = {}",
                self.p()
            ))),
            _ => Ok(()),
        }
    }

    /// Reads a headerless CSV with one observation per row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::new();
        let mut width = None;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if width.is_some_and(|w| w != rec.len()) {
                return Err(Error::InvalidInput(format!("ragged CSV at row {}", i + 1)));
            }
            width = Some(rec.len());
            for field in rec.iter() {
                data.push(parse_f64(field)?);
            }
        }
        let p = width.ok_or_else(|| Error::InvalidInput("empty design CSV".into()))?;
        DesignMatrix::from_rows(data.len() / p, p, &data)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for i in 0..self.n() {
            w.write_record(self.x.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        DesignMatrix::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn parse_f64(field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::InvalidInput(format!("not a number: {field:?}")))
}

/// Reads every numeric field of a headerless CSV in row order, so a vector
/// may be stored as one row or one column.
pub fn read_vector_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        for field in rec?.iter().filter(|f| !f.is_empty()) {
            out.push(parse_f64(field)?);
        }
    }
    Ok(out)
}

/// Design, coefficients, noise level and response.
#[derive(Debug, Clone)]
pub struct LinearInstance {
    pub design: DesignMatrix,
    pub beta: DVector<f64>,
    pub support: ModelSubset,
    pub sigma: f64,
    pub y: DVector<f64>,
    pub eta_relax: f64,
}

impl LinearInstance {
    pub fn new(
        design: DesignMatrix,
        beta: DVector<f64>,
        sigma: f64,
        y: DVector<f64>,
    ) -> Result<Self> {
        if beta.len() != design.p() {
            return Err(Error::DimensionMismatch {
                context: "LinearInstance beta",
                expected: design.p(),
                found: beta.len(),
            });
        }
        if y.len() != design.n() {
            return Err(Error::DimensionMismatch {
                context: "LinearInstance y",
                expected: design.n(),
                found: y.len(),
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if beta.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("beta and y must be finite".into()));
        }
        let support = ModelSubset::new((0..beta.len()).filter(|&j| beta[j] != 0.0).collect());
        if support.is_empty() {
            return Err(Error::InvalidSpec("beta has no nonzero entries".into()));
        }
        Ok(LinearInstance {
            design,
            beta,
            support,
            sigma,
            y,
            eta_relax: 0.0,
        })
    }

    /// `y = Xβ` exactly.
    pub fn noiseless(design: DesignMatrix, beta: DVector<f64>) -> Result<Self> {
        let y = design.matrix() * &beta;
        LinearInstance::new(design, beta, 0.0, y)
    }

    /// `y = Xβ + σε` with `ε` drawn from the seeded normal stream.
    pub fn with_noise(
        design: DesignMatrix,
        beta: DVector<f64>,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        if beta.len() != design.p() {
            return Err(Error::DimensionMismatch {
                context: "LinearInstance beta",
                expected: design.p(),
                found: beta.len(),
            });
        }
        let noise = DVector::from_vec(normal_vector(seed, 0, design.n()));
        let y = design.matrix() * &beta + noise * sigma;
        LinearInstance::new(design, beta, sigma, y)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::InvalidSpec(format!(
                "eta must lie in [0, 1), got {eta}"
            )));
        }
        self.eta_relax = eta;
        Ok(self)
    }

    /// Same design and coefficients, fresh response.
    pub fn resample(&self, seed: u64) -> Result<Self> {
        LinearInstance::with_noise(self.design.clone(), self.beta.clone(), self.sigma, seed)
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

    /// `β` restricted to `d`.
    pub fn beta_on(&self, d: &ModelSubset) -> DVector<f64> {
        DVector::from_iterator(d.len(), d.iter().map(|j| self.beta[j]))
    }

    /// `yᵀ(Id − P_D)y`.
    pub fn rss(&self, d: &ModelSubset) -> Result<f64> {
        let basis = self.design.basis(d)?;
        Ok(residual(&basis, &self.y)?.norm_squared())
    }

    /// `n^{-1/2} (Id − P_D) X_{S\D} β_{S\D}` and its direction.
    pub fn residualized_signal(&self, d: &ModelSubset) -> Result<ResidualizedSignal> {
        let missed = self.support.difference(d);
        let n = self.n();
        if missed.is_empty() {
            return Ok(ResidualizedSignal {
                gamma: DVector::zeros(n),
                gamma_hat: None,
            });
        }
        let raw = self.design.apply(&missed, &self.beta_on(&missed))?;
        let scale = (n as f64).sqrt();
        let gamma = residual(&self.design.basis(d)?, &raw)? / scale;
        let norm = gamma.norm();
        let gamma_hat = if norm > ZERO_SIGNAL_TOL * raw.norm() / scale {
            Some(&gamma / norm)
        } else {
            None
        };
        Ok(ResidualizedSignal { gamma, gamma_hat })
    }

    pub fn to_document(&self, design_ref: Option<String>) -> InstanceDocument {
        InstanceDocument {
            n: self.n(),
            p: self.p(),
            beta: self.beta.iter().cloned().collect(),
            support: self.support.clone(),
            sigma: self.sigma,
            y: self.y.iter().cloned().collect(),
            design_ref,
        }
    }

    pub fn from_document(doc: &InstanceDocument, design: DesignMatrix) -> Result<Self> {
        if design.n() != doc.n || design.p() != doc.p {
            return Err(Error::InvalidInput(format!(
                "document expects a {}x{} design, got {}x{}",
                doc.n,
                doc.p,
                design.n(),
                design.p()
            )));
        }
        let inst = LinearInstance::new(
            design,
            DVector::from_vec(doc.beta.clone()),
            doc.sigma,
            DVector::from_vec(doc.y.clone()),
        )?;
        if inst.support != doc.support {
            return Err(Error::InvalidInput(format!(
                "support {} does not match nonzeros of beta {}",
                doc.support, inst.support
            )));
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone)]
pub struct ResidualizedSignal {
    pub gamma: DVector<f64>,
    /// `None` when the signal is numerically zero.
    pub gamma_hat: Option<DVector<f64>>,
}

/// On-disk form of a [`LinearInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub n: usize,
    pub p: usize,
    pub beta: Vec<f64>,
    pub support: ModelSubset,
    pub sigma: f64,
    pub y: Vec<f64>,
    pub design_ref: Option<String>,
}

/// Which size-`ŝ` competitors of `S` to enumerate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyConstraint {
    /// Every `D ≠ S`.
    All,
    /// `S ∩ D = I`.
    FixedOverlap(ModelSubset),
    /// `|D \ S| = k`.
    MismatchK(usize),
    /// `S \ D = {j0}` with `|D| = s`.
    LeaveOneOut(usize),
}

/// Lazily yields the family in lexicographic order. Infeasible constraints
/// yield nothing.
pub fn enumerate_family(
    p: usize,
    s_hat: usize,
    truth: &ModelSubset,
    constraint: &FamilyConstraint,
) -> Box<dyn Iterator<Item = ModelSubset> + Send> {
    let truth = truth.clone();
    match constraint {
        FamilyConstraint::All => Box::new(
            Combinations::new((0..p).collect(), s_hat)
                .map(ModelSubset::from_sorted_unchecked)
                .filter(move |d| *d != truth),
        ),
        FamilyConstraint::MismatchK(k) => {
            let k = *k;
            Box::new(
                Combinations::new((0..p).collect(), s_hat)
                    .map(ModelSubset::from_sorted_unchecked)
                    .filter(move |d| *d != truth && d.difference(&truth).len() == k),
            )
        }
        FamilyConstraint::FixedOverlap(overlap) => overlap_family(p, s_hat, &truth, overlap),
        FamilyConstraint::LeaveOneOut(j0) => {
            if s_hat != truth.len() || !truth.contains(*j0) {
                return Box::new(std::iter::empty());
            }
            let overlap = truth.difference(&ModelSubset::new(vec![*j0]));
            overlap_family(p, s_hat, &truth, &overlap)
        }
    }
}

fn overlap_family(
    p: usize,
    s_hat: usize,
    truth: &ModelSubset,
    overlap: &ModelSubset,
) -> Box<dyn Iterator<Item = ModelSubset> + Send> {
    if !overlap.is_subset_of(truth)
        || overlap.len() > s_hat
        || overlap.max_index().is_some_and(|j| j >= p)
    {
        return Box::new(std::iter::empty());
    }
    let outside = truth.complement(p);
    let base = overlap.clone();
    let truth = truth.clone();
    // with I fixed, lexicographic order of the merged set follows that of its S^c part
    Box::new(
        Combinations::new(outside.indices().to_vec(), s_hat - overlap.len())
            .map(move |extra| ModelSubset::merge_disjoint(base.indices(), &extra))
            .filter(move |d| *d != truth),
    )
}

/// Size of [`enumerate_family`]'s output, from binomial identities.
pub fn family_size(
    p: usize,
    s_hat: usize,
    truth: &ModelSubset,
    constraint: &FamilyConstraint,
) -> u128 {
    let s = truth.len();
    let outside = p.saturating_sub(s);
    let excludes_truth = |contains: bool| u128::from(contains && s_hat == s);
    match constraint {
        FamilyConstraint::All => binomial(p, s_hat) - excludes_truth(s_hat <= p),
        FamilyConstraint::MismatchK(k) => {
            if *k > s_hat {
                return 0;
            }
            binomial(s, s_hat - k).saturating_mul(binomial(outside, *k)) - excludes_truth(*k == 0)
        }
        FamilyConstraint::FixedOverlap(overlap) => {
            if !overlap.is_subset_of(truth) || overlap.len() > s_hat {
                return 0;
            }
            binomial(outside, s_hat - overlap.len()) - excludes_truth(overlap == truth)
        }
        FamilyConstraint::LeaveOneOut(j0) => {
            if s_hat == s && truth.contains(*j0) {
                outside as u128
            } else {
                0
            }
        }
    }
}

/// Errors when the family is larger than `budget`.
pub fn check_budget(count: u128, budget: u128) -> Result<()> {
    if count > budget {
        return Err(Error::BudgetExceeded { count, budget });
    }
    Ok(())
}

/// Collects a budget-checked family.
pub fn collect_family(
    p: usize,
    s_hat: usize,
    truth: &ModelSubset,
    constraint: &FamilyConstraint,
    budget: u128,
) -> Result<Vec<ModelSubset>> {
    check_budget(family_size(p, s_hat, truth, constraint), budget)?;
    Ok(enumerate_family(p, s_hat, truth, constraint).collect())
}

/// A metric space together with the candidates its points came from.
#[derive(Debug, Clone)]
pub struct CandidateSpace {
    pub space: FiniteMetricSpace,
    /// `members[i]` produced point `i`.
    pub members: Vec<ModelSubset>,
    /// Candidates dropped because their residualized signal vanished.
    pub excluded: Vec<ModelSubset>,
}

fn check_strict_overlap(instance: &LinearInstance, overlap: &ModelSubset) -> Result<()> {
    if !overlap.is_subset_of(&instance.support) || *overlap == instance.support {
        return Err(Error::InvalidInput(format!(
            "overlap {overlap} must be a proper subset of the support {}",
            instance.support
        )));
    }
    Ok(())
}

/// Unit residualized signals of every `D` with `S ∩ D = I`, Euclidean metric.
pub fn build_t_space(
    instance: &LinearInstance,
    overlap: &ModelSubset,
    s_hat: usize,
    budget: u128,
) -> Result<CandidateSpace> {
    check_strict_overlap(instance, overlap)?;
    let family = collect_family(
        instance.p(),
        s_hat,
        &instance.support,
        &FamilyConstraint::FixedOverlap(overlap.clone()),
        budget,
    )?;
    let signals: Vec<Option<DVector<f64>>> = family
        .par_iter()
        .map(|d| Ok(instance.residualized_signal(d)?.gamma_hat))
        .collect::<Result<_>>()?;
    let mut members = Vec::new();
    let mut excluded = Vec::new();
    let mut points = Vec::new();
    for (d, g) in family.into_iter().zip(signals) {
        match g {
            Some(v) => {
                members.push(d);
                points.push(v);
            }
            None => excluded.push(d),
        }
    }
    let space = space_from_vectors(&points, format!("T[{overlap}]"))?;
    Ok(CandidateSpace {
        space,
        members,
        excluded,
    })
}

/// Residual subspaces `col(X_D) ∩ col(X_I)^⊥` of every `D` with `S ∩ D = I`,
/// operator-norm metric.
pub fn build_g_space(
    instance: &LinearInstance,
    overlap: &ModelSubset,
    s_hat: usize,
    budget: u128,
) -> Result<CandidateSpace> {
    check_strict_overlap(instance, overlap)?;
    let family = collect_family(
        instance.p(),
        s_hat,
        &instance.support,
        &FamilyConstraint::FixedOverlap(overlap.clone()),
        budget,
    )?;
    let design = &instance.design;
    let inner = design.basis(overlap)?;
    let bases: Vec<SubspaceBasis> = family
        .par_iter()
        .map(|d| {
            let full = design.basis(d)?;
            let extra = design.columns(&d.difference(overlap))?;
            Ok(residual_basis(&full, &inner, &extra, DEFAULT_RANK_TOL)?.with_source(d.clone()))
        })
        .collect::<Result<_>>()?;
    let space = space_from_subspaces(&bases, format!("G[{overlap}]"))?;
    Ok(CandidateSpace {
        space,
        members: family,
        excluded: Vec::new(),
    })
}
