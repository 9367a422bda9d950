//! Closed-form information-theoretic bounds. Natural logarithms throughout.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::ensemble::{sin2_half_theta, theta_from_beta_eps};
use crate::error::{Error, Result};

/// `sqrt(2 pi (n-1)) cos(theta) / sin^{n-2}(theta)`: approximate size of a
/// maximal spherical code with minimum angle `theta`, with the asymptotic
/// `(1 + o(1))` factor taken as 1.
pub fn code_size_lower_bound(n: usize, theta: f64) -> f64 {
    let nf = n as f64;
    (2.0 * PI * (nf - 1.0)).sqrt() * theta.cos() / theta.sin().powi(n as i32 - 2)
}

/// `(n-2) N - (n-1)(n-3)`, the facet count of a simplicial polytope with
/// `N` vertices.
pub fn facet_count_lower_bound(n: usize, code_size: f64) -> f64 {
    let nf = n as f64;
    (nf - 2.0) * code_size - (nf - 1.0) * (nf - 3.0)
}

/// `(cos theta, sin theta)` written directly in `(n, eps, beta)`.
pub fn theta_trig(n: usize, eps: f64, beta: f64) -> (f64, f64) {
    let nf = n as f64;
    let b2 = beta * beta;
    let e2 = eps * eps;
    let den = e2 + nf * (nf - 2.0).powi(2) * b2;
    let cos = (e2 - nf * (nf - 2.0) * b2) / den;
    let sin = beta * (nf * (nf - 1.0) * (nf - 2.0) * (2.0 * e2 + nf * (nf - 2.0) * (nf - 3.0) * b2)).sqrt()
        / den;
    (cos, sin)
}

/// Lower bound on the number of instance/reward pairs, obtained by feeding
/// the code-size bound at the separation angle into the facet count.
pub fn ensemble_size_lower_bound(n: usize, eps: f64, beta: f64) -> Result<f64> {
    let rhs = sin2_half_theta(n, beta, eps);
    if !(rhs <= 1.0) {
        return Err(Error::InfeasibleSeparation { beta, eps, rhs });
    }
    let nf = n as f64;
    let (cos, sin) = theta_trig(n, eps, beta);
    let code = (2.0 * PI * (nf - 1.0)).sqrt() * cos / sin.powi(n as i32 - 2);
    Ok(facet_count_lower_bound(n, code))
}

/// `2 sin(theta/2) / sqrt(2 (n-2) (1 + (n-2) cos theta))`, the claimed lower
/// bound on the dot product of a unit normal with the unit centroid.
pub fn centroid_dot_lower_bound(n: usize, theta: f64) -> Result<f64> {
    let nf = n as f64;
    let value = 1.0 + (nf - 2.0) * theta.cos();
    if !(value > 0.0) {
        return Err(Error::DegenerateDenominator { value });
    }
    Ok(2.0 * (theta / 2.0).sin() / (2.0 * (nf - 2.0) * value).sqrt())
}

/// `2 eps^2 n / (1 - n eps)`: KL divergence between two rows in the
/// `eps`-ball around the uniform row.
pub fn kl_column_bound(n: usize, eps: f64) -> Result<f64> {
    let nf = n as f64;
    if !(nf * eps < 1.0) {
        return Err(Error::EpsTooLarge { n, eps });
    }
    Ok(2.0 * eps * eps * nf / (1.0 - nf * eps))
}

/// `(m-1)` times [`kl_column_bound`]: KL between `m`-state trajectories.
pub fn kl_trajectory_bound(n: usize, eps: f64, m: u64) -> Result<f64> {
    assert!(m >= 1, "trajectories have at least one state");
    Ok((m - 1) as f64 * kl_column_bound(n, eps)?)
}

/// Unclamped `1 - ((m-1) KL + log 2) / log eta`, with real-valued `m`.
pub fn fano_expression(n: usize, eps: f64, m: f64, eta: f64) -> Result<f64> {
    if !(eta > 1.0) {
        return Err(Error::VacuousBound { eta });
    }
    let kl = kl_column_bound(n, eps)?;
    Ok(1.0 - ((m - 1.0) * kl + LN_2) / eta.ln())
}

/// Fano lower bound on the identification error after `m` states, clamped to
/// `[0, 1]`. `eta` defaults to [`ensemble_size_lower_bound`].
pub fn fano_error_lower_bound(
    n: usize,
    eps: f64,
    beta: f64,
    m: u64,
    ensemble_size_override: Option<f64>,
) -> Result<f64> {
    assert!(m >= 1, "trajectories have at least one state");
    let eta = match ensemble_size_override {
        Some(e) => e,
        None => ensemble_size_lower_bound(n, eps, beta)?,
    };
    Ok(fano_expression(n, eps, m as f64, eta)?.clamp(0.0, 1.0))
}

/// Sample count below which the simplex ensemble at
/// `eps = 1/sqrt(2n(n-1)) = sqrt(n-2) beta` keeps the error at least 1/2:
/// `(n-1)(0.5 log n - log 2)(1 - sqrt(n/(2(n-1)))) + 1`.
pub fn sample_threshold_simplex_eq(n: usize) -> f64 {
    let nf = n as f64;
    (nf - 1.0) * (0.5 * nf.ln() - LN_2) * (1.0 - (nf / (2.0 * (nf - 1.0))).sqrt()) + 1.0
}

/// Sample count below which the simplex ensemble at `eps = sqrt(n-2) beta`
/// keeps the error at least 1/2:
/// `(0.5 log n - log 2) / (2 (n-2) n beta^2) (1 - n sqrt(n-2) beta) + 1`.
pub fn sample_threshold_beta(n: usize, beta: f64) -> Result<f64> {
    let nf = n as f64;
    let shrink = nf * (nf - 2.0).sqrt() * beta;
    if !(shrink < 1.0) {
        return Err(Error::BetaTooLarge {
            n,
            beta,
            detail: format!("n*sqrt(n-2)*beta = {shrink} must be below 1"),
        });
    }
    Ok((0.5 * nf.ln() - LN_2) / (2.0 * (nf - 2.0) * nf * beta * beta) * (1.0 - shrink) + 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub eps: f64,
    pub beta: f64,
    pub theta: f64,
    pub m: u64,
    /// Asymptotic: the `(1 + o(1))` factor is evaluated as 1.
    pub n_lower: f64,
    pub n_lower_asymptotic: bool,
    pub facets_lower: f64,
    pub eta: f64,
    pub eta_vacuous: bool,
    pub kl_col: f64,
    pub kl_traj: f64,
    pub fano_error_lb: Option<f64>,
    pub centroid_dot_lb: Option<f64>,
    pub m_threshold_cor1: f64,
    pub m_threshold_cor2: Option<f64>,
}

impl BoundReport {
    /// Evaluates every bound. `eta_override` replaces the ensemble-size bound
    /// in the Fano term (e.g. the exact simplex ensemble size `n`).
    pub fn compute(n: usize, beta: f64, eps: f64, m: u64, eta_override: Option<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("need n >= 3, got {n}")));
        }
        let theta = theta_from_beta_eps(n, beta, eps)?;
        let n_lower = code_size_lower_bound(n, theta);
        let facets_lower = ensemble_size_lower_bound(n, eps, beta)?;
        let eta = eta_override.unwrap_or(facets_lower);
        let kl_col = kl_column_bound(n, eps)?;
        let kl_traj = kl_trajectory_bound(n, eps, m)?;
        let fano_error_lb = if eta > 1.0 {
            Some(fano_expression(n, eps, m as f64, eta)?.clamp(0.0, 1.0))
        } else {
            None
        };
        Ok(BoundReport {
            n,
            eps,
            beta,
            theta,
            m,
            n_lower,
            n_lower_asymptotic: true,
            facets_lower,
            eta,
            eta_vacuous: !(eta > 1.0),
            kl_col,
            kl_traj,
            fano_error_lb,
            centroid_dot_lb: centroid_dot_lower_bound(n, theta).ok(),
            m_threshold_cor1: sample_threshold_simplex_eq(n),
            m_threshold_cor2: sample_threshold_beta(n, beta).ok(),
        })
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}"));
        let flag = |b: bool| if b { " (vacuous)" } else { "" };
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22} {v}\n"));
        line("n", self.n.to_string());
        line("eps", format!("{:.6e}", self.eps));
        line("beta", format!("{:.6e}", self.beta));
        line("theta", format!("{:.6} rad", self.theta));
        line("m", self.m.to_string());
        line("code size N >=", format!("{:.6e} (asymptotic){}", self.n_lower, flag(self.n_lower <= 0.0)));
        line("facets >=", format!("{:.6e}{}", self.facets_lower, flag(self.facets_lower <= 1.0)));
        line("eta", format!("{:.6e}{}", self.eta, flag(self.eta_vacuous)));
        line("centroid dot >=", opt(self.centroid_dot_lb));
        line("row KL <=", format!("{:.6e}", self.kl_col));
        line("trajectory KL <=", format!("{:.6e}", self.kl_traj));
        line("Fano error >=", opt(self.fano_error_lb));
        line("m threshold (eq eps)", format!("{:.6}", self.m_threshold_cor1));
        line("m threshold (beta)", opt(self.m_threshold_cor2));
        s
    }
}
