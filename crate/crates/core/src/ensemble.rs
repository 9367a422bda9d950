//! Hard IRL instance/reward pairs built from the facets of a spherical code.
//!
//! Every instance shares the uniform transition matrix for `a_1`. Facet `i`
//! with leave-one-out normals `p_1..p_{n-1}` defines the second action by
//! `P_{a_2}(j) = P_{a_1}(j) - Pi^T [p_j; 0]`, with the last row reusing
//! `p_1`, and the reward `R = (I - gamma P_{a_1}) Pi^T [y_hat; 0]`,
//! normalized to unit 1-norm.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    facets_of_code, icosahedron_code, min_angle, rotation_to_hyperplane, simplex_code, CodeKind,
    Facet, SphericalCode,
};
use crate::mdp::{separability_margin, IrlInstance, RewardVector, StochasticMatrix};

pub const DEFAULT_GAMMA: f64 = 0.1;

/// Tolerance for the angle precondition and for the separability check.
pub const ANGLE_TOL: f64 = 1e-9;
pub const MARGIN_TOL: f64 = 1e-9;
const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub eps: f64,
    /// Angle tied to `(n, beta, eps)` by [`theta_from_beta_eps`], radians.
    pub theta: f64,
    pub code_kind: CodeKind,
}

impl EnsembleConfig {
    /// Validates `eps` against [`eps_bounds`] and derives `theta`. When `eps`
    /// is `None` it defaults to `min(1/sqrt(2n(n-1)), upper bound)`.
    pub fn new(
        n: usize,
        gamma: f64,
        beta: f64,
        eps: Option<f64>,
        code_kind: CodeKind,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("need n >= 3, got {n}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!("beta must be positive, got {beta}")));
        }
        match code_kind {
            CodeKind::Simplex => {}
            CodeKind::Icosahedron if n == 4 => {}
            CodeKind::Icosahedron => {
                return Err(Error::InvalidConfig(format!(
                    "the icosahedron code needs n = 4, got {n}"
                )))
            }
            CodeKind::Custom => {
                return Err(Error::UnsupportedCode("ensembles need a simplex or icosahedron code".into()))
            }
        }
        let (lo, hi) = eps_bounds(n, beta)?;
        let eps = eps.unwrap_or_else(|| default_eps(n).min(hi));
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        let slack = 1e-12 * hi;
        if eps < lo - slack || eps > hi + slack {
            return Err(Error::InvalidConfig(format!(
                "eps = {eps} is outside [{lo}, {hi}]"
            )));
        }
        let theta = theta_from_beta_eps(n, beta, eps)?;
        Ok(EnsembleConfig {
            n,
            gamma,
            beta,
            eps,
            theta,
            code_kind,
        })
    }

    pub fn code(&self) -> SphericalCode {
        match self.code_kind {
            CodeKind::Icosahedron => icosahedron_code(),
            _ => simplex_code(self.n - 1),
        }
    }
}

/// `1/sqrt(2n(n-1))`, half the inradius (in squared terms) of the simplex.
pub fn default_eps(n: usize) -> f64 {
    let nf = n as f64;
    1.0 / (2.0 * nf * (nf - 1.0)).sqrt()
}

/// Angle `theta` with `sin^2(theta/2) = n(n-1)(n-2) beta^2 / (2 eps^2 + 2 n (n-2)^2 beta^2)`.
pub fn theta_from_beta_eps(n: usize, beta: f64, eps: f64) -> Result<f64> {
    assert!(n >= 3, "theta needs n >= 3");
    let rhs = sin2_half_theta(n, beta, eps);
    if !(rhs <= 1.0) {
        return Err(Error::InfeasibleSeparation { beta, eps, rhs });
    }
    Ok(2.0 * rhs.sqrt().asin())
}

pub(crate) fn sin2_half_theta(n: usize, beta: f64, eps: f64) -> f64 {
    let nf = n as f64;
    let b2 = beta * beta;
    nf * (nf - 1.0) * (nf - 2.0) * b2 / (2.0 * eps * eps + 2.0 * nf * (nf - 2.0).powi(2) * b2)
}

/// `(sqrt(n-2) beta, 1/sqrt(n(n-1)))`: the admissible range of `eps`.
pub fn eps_bounds(n: usize, beta: f64) -> Result<(f64, f64)> {
    assert!(n >= 3, "eps bounds need n >= 3");
    let nf = n as f64;
    let lo = (nf - 2.0).sqrt() * beta;
    let hi = 1.0 / (nf * (nf - 1.0)).sqrt();
    if lo > hi * (1.0 + 1e-12) {
        return Err(Error::BetaTooLarge {
            n,
            beta,
            detail: format!("sqrt(n-2)*beta = {lo} exceeds 1/sqrt(n(n-1)) = {hi}"),
        });
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    /// Two actions, `transitions[0]` uniform. Carries a certificate only when
    /// the reward reaches `config.beta`.
    pub instance: IrlInstance,
    pub reward: RewardVector,
    pub facet_index: usize,
    pub config: EnsembleConfig,
}

impl HardInstance {
    pub fn margin(&self) -> Result<f64> {
        separability_margin(&self.instance, &self.reward)
    }
}

/// Builds the instance for one facet of `code`.
///
/// `facet` must carry normals of norm `cfg.eps`, and the code's minimum
/// angle must be at least `cfg.theta`.
pub fn build_instance(
    cfg: &EnsembleConfig,
    code: &SphericalCode,
    facet: &Facet,
    facet_index: usize,
) -> Result<HardInstance> {
    let n = cfg.n;
    if code.dim != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: code.dim,
        });
    }
    if facet.normals.len() != n - 1 {
        return Err(Error::InvalidInstance(format!(
            "facet has {} normals, expected {}",
            facet.normals.len(),
            n - 1
        )));
    }
    for p in &facet.normals {
        if (p.norm() - cfg.eps).abs() > 1e-10 * cfg.eps.max(1.0) {
            return Err(Error::InvalidInstance(format!(
                "normal has norm {}, expected eps = {}",
                p.norm(),
                cfg.eps
            )));
        }
    }
    let angle = min_angle(code);
    if angle < cfg.theta - ANGLE_TOL {
        return Err(Error::InvalidInstance(format!(
            "code angle {angle} is below the angle {} required by beta and eps",
            cfg.theta
        )));
    }

    let rot = rotation_to_hyperplane(n);
    let uniform = 1.0 / n as f64;
    let mut p2 = DMatrix::from_element(n, n, uniform);
    for row in 0..n {
        let normal = if row < n - 1 {
            &facet.normals[row]
        } else {
            &facet.normals[0]
        };
        let diff = rot.lift(normal);
        for col in 0..n {
            p2[(row, col)] -= diff[col];
        }
        let min_entry = p2.row(row).min();
        if min_entry < -ROW_TOL {
            return Err(Error::InvalidRow { row, min_entry });
        }
    }
    for v in p2.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let p1 = StochasticMatrix::uniform(n);
    let p2 = StochasticMatrix::from_rows(&matrix_rows(&p2))?;

    let lifted = rot.lift(&facet.unit_centroid);
    let raw: DVector<f64> = (DMatrix::identity(n, n) - p1.matrix() * cfg.gamma) * lifted;
    let reward = RewardVector::from(raw).normalize_l1()?;

    let instance = IrlInstance::new(cfg.gamma, vec![p1, p2])?;
    let margin = separability_margin(&instance, &reward)?;
    let instance = if margin >= cfg.beta - MARGIN_TOL {
        instance.with_certificate(reward.clone(), cfg.beta)?
    } else {
        instance
    };
    Ok(HardInstance {
        instance,
        reward,
        facet_index,
        config: cfg.clone(),
    })
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// One instance per facet, ordered by facet index.
pub fn build_ensemble(cfg: &EnsembleConfig) -> Result<Vec<HardInstance>> {
    let code = cfg.code();
    let facets = facets_of_code(&code)?;
    facets
        .into_par_iter()
        .enumerate()
        .map(|(i, f)| {
            let f = f.with_normals(&code, cfg.eps)?;
            build_instance(cfg, &code, &f, i)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginFailure {
    pub facet: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFailure {
    pub instance: usize,
    pub reward: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormFailure {
    pub facet: usize,
    pub l1_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instances: usize,
    pub beta: f64,
    pub min_own_margin: f64,
    pub max_cross_margin: f64,
    /// Own reward below `beta - 1e-9`.
    pub own_margin_failures: Vec<MarginFailure>,
    /// Instance `i` with reward `j != i` whose smallest margin is not negative.
    pub cross_failures: Vec<CrossFailure>,
    pub norm_failures: Vec<NormFailure>,
    pub errors: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.own_margin_failures.is_empty()
            && self.cross_failures.is_empty()
            && self.norm_failures.is_empty()
            && self.errors.is_empty()
    }
}

/// Checks own-reward margins, cross exclusion and reward normalization.
pub fn verify_ensemble(ensemble: &[HardInstance]) -> VerificationReport {
    let beta = ensemble.first().map(|h| h.config.beta).unwrap_or(0.0);
    let mut report = VerificationReport {
        instances: ensemble.len(),
        beta,
        min_own_margin: f64::INFINITY,
        max_cross_margin: f64::NEG_INFINITY,
        own_margin_failures: Vec::new(),
        cross_failures: Vec::new(),
        norm_failures: Vec::new(),
        errors: Vec::new(),
    };
    let rows: Vec<Vec<std::result::Result<f64, String>>> = ensemble
        .par_iter()
        .map(|hi| {
            ensemble
                .iter()
                .map(|hj| separability_margin(&hi.instance, &hj.reward).map_err(|e| e.to_string()))
                .collect()
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        let norm = ensemble[i].reward.l1_norm();
        if (norm - 1.0).abs() > 1e-9 {
            report.norm_failures.push(NormFailure {
                facet: ensemble[i].facet_index,
                l1_norm: norm,
            });
        }
        for (j, margin) in row.into_iter().enumerate() {
            let margin = match margin {
                Ok(m) => m,
                Err(e) => {
                    report.errors.push(format!("instance {i}, reward {j}: {e}"));
                    continue;
                }
            };
            if i == j {
                report.min_own_margin = report.min_own_margin.min(margin);
                if margin < beta - MARGIN_TOL {
                    report.own_margin_failures.push(MarginFailure {
                        facet: ensemble[i].facet_index,
                        margin,
                    });
                }
            } else {
                report.max_cross_margin = report.max_cross_margin.max(margin);
                if margin >= 0.0 {
                    report.cross_failures.push(CrossFailure {
                        instance: ensemble[i].facet_index,
                        reward: ensemble[j].facet_index,
                        margin,
                    });
                }
            }
        }
    }
    report
}
