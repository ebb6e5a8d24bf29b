//! Gaussian design generators and block-design closed forms.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DesignMatrix;
use crate::rng::normal_vector;

/// Largest admissible signal-noise correlation.
pub const MAX_SIGNAL_CORRELATION: f64 = 0.997;
/// Multiplier `C` in the band `C·√(log p / n)`.
pub const BAND_CONSTANT: f64 = 4.0;

/// Correlation structure of the rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DesignKind {
    Independent,
    /// Every pair of columns has correlation `r`.
    Equicorrelated {
        r: f64,
    },
    /// Column 0 has correlation `c` with every other column; the others are
    /// mutually correlated at `r`.
    Block {
        c: f64,
        r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub kind: DesignKind,
    pub p: usize,
    #[serde(default)]
    pub normalize: bool,
    pub seed: u64,
}

impl DesignSpec {
    pub fn new(kind: DesignKind, p: usize, seed: u64) -> Result<Self> {
        let spec = DesignSpec {
            kind,
            p,
            normalize: false,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn independent(p: usize, seed: u64) -> Self {
        DesignSpec {
            kind: DesignKind::Independent,
            p,
            normalize: false,
            seed,
        }
    }

    pub fn equicorrelated(p: usize, r: f64, seed: u64) -> Result<Self> {
        DesignSpec::new(DesignKind::Equicorrelated { r }, p, seed)
    }

    pub fn block(p: usize, c: f64, r: f64, seed: u64) -> Result<Self> {
        DesignSpec::new(DesignKind::Block { c, r }, p, seed)
    }

    pub fn normalized(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    /// `(c, r)` of the equivalent block structure.
    pub fn block_params(&self) -> (f64, f64) {
        match self.kind {
            DesignKind::Independent => (0.0, 0.0),
            DesignKind::Equicorrelated { r } => (r, r),
            DesignKind::Block { c, r } => (c, r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidSpec("p must be positive".into()));
        }
        let (c, r) = self.block_params();
        if !(0.0..1.0).contains(&r) {
            return Err(Error::InvalidSpec(format!("r = {r} must lie in [0, 1)")));
        }
        if let DesignKind::Block { .. } = self.kind {
            if !(0.0..=MAX_SIGNAL_CORRELATION).contains(&c) {
                return Err(Error::InvalidSpec(format!(
                    "c = {c} must lie in [0, {MAX_SIGNAL_CORRELATION}]"
                )));
            }
        }
        if !block_is_positive_definite(self.p, c, r) {
            let bound = r + (1.0 - r) / (self.p as f64 - 1.0);
            return Err(Error::NotPositiveDefinite(format!(
                "need c^2 < r + (1-r)/(p-1): c^2 = {:.6} but bound = {bound:.6} (c = {c}, r = {r}, p = {})",
                c * c,
                self.p
            )));
        }
        Ok(())
    }

    /// Population covariance of one row.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let (c, r) = self.block_params();
        Ok(DMatrix::from_fn(self.p, self.p, |i, j| {
            if i == j {
                1.0
            } else if i == 0 || j == 0 {
                c
            } else {
                r
            }
        }))
    }

    /// Rows drawn i.i.d. from `N(0, Σ)`; row `i` uses stream `i` of the seed.
    pub fn sample(&self, n: usize) -> Result<DesignMatrix> {
        if n == 0 {
            return Err(Error::InvalidSpec("n must be positive".into()));
        }
        let p = self.p;
        let factor = match self.kind {
            DesignKind::Independent => None,
            _ => Some(
                self.covariance()?
                    .cholesky()
                    .ok_or_else(|| {
                        Error::NotPositiveDefinite("Cholesky factorisation failed".into())
                    })?
                    .l(),
            ),
        };
        self.validate()?;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let z = normal_vector(self.seed, i as u64, p);
                match &factor {
                    None => z,
                    Some(l) => (0..p)
                        .map(|a| (0..=a).map(|b| l[(a, b)] * z[b]).sum())
                        .collect(),
                }
            })
            .collect();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let design = DesignMatrix::from_rows(n, p, &flat)?;
        if self.normalize {
            design.normalize()
        } else {
            Ok(design)
        }
    }
}

/// `c² < r + (1−r)/(p−1)`, which with `r ∈ [0,1)` makes the block matrix PD.
pub fn block_is_positive_definite(p: usize, c: f64, r: f64) -> bool {
    if p <= 1 {
        return true;
    }
    c * c < r + (1.0 - r) / (p as f64 - 1.0)
}

/// Large-sample values of the block-design complexities and margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPrediction {
    /// `2c²(1−r)/(1−c²)`
    pub e_t_sq: f64,
    /// `1 − r²`
    pub e_g_sq: f64,
    /// `1 − c²`
    pub tau_ratio: f64,
    /// Multiplier `C` of `√(log p / n)`.
    pub tolerance_band: f64,
}

pub fn closed_form(c: f64, r: f64) -> ClosedFormPrediction {
    ClosedFormPrediction {
        e_t_sq: 2.0 * c * c * (1.0 - r) / (1.0 - c * c),
        e_g_sq: 1.0 - r * r,
        tau_ratio: 1.0 - c * c,
        tolerance_band: BAND_CONSTANT,
    }
}

/// `C·√(log p / n)` with `C` = [`BAND_CONSTANT`].
pub fn band_epsilon(n: usize, p: usize) -> f64 {
    BAND_CONSTANT * ((p as f64).ln() / n as f64).sqrt()
}

/// Interval for `τ*(1)/β₁²` at deviation `eps`.
pub fn tau_ratio_interval(c: f64, eps: f64) -> (f64, f64) {
    let lo = 1.0 - eps - (c + eps).powi(2) / (1.0 - eps);
    let hi = 1.0 + eps - (c - eps).powi(2) / (1.0 + eps);
    (lo, hi)
}

/// `2r²/(1+r) − (1−r²)`: positive where the T complexity dominates on the
/// equicorrelated design.
pub fn crossing_gap(r: f64) -> f64 {
    2.0 * r * r / (1.0 + r) - (1.0 - r * r)
}

/// Root of [`crossing_gap`] on `[0, 1)` by bisection.
pub fn solve_r0() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if crossing_gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
