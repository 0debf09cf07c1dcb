use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The unspecified positive constants in the step-size/epoch-length rules.
///
/// `c`, `c_prime` and `c_second` parameterize the geometric-phase rule;
/// `burn_c` and `burn_c_prime` the burn-in step size and iteration count.
/// The defaults are engineering choices tuned on the standard synthetic
/// instances: `c_prime = 1/2` makes the expected per-epoch contraction of
/// the potential equal to `delta / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConstants {
    pub c: f64,
    pub c_prime: f64,
    pub c_second: f64,
    pub burn_c: f64,
    pub burn_c_prime: f64,
}

impl Default for SolverConstants {
    fn default() -> Self {
        SolverConstants {
            c: 1.0,
            c_prime: 0.5,
            c_second: 1.0,
            burn_c: 5.0e4,
            burn_c_prime: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParameters {
    pub eta: f64,
    pub m: usize,
    /// The multiplier `a` in `eta = a δ² λ / r²`.
    pub a: f64,
}

/// Step size and epoch length from the eigengap estimate:
///
/// ```text
/// a   = min{ c, c″ / (4δ²c·k·log(2/δ)), (1 / (4δ²c)) · (c″ / (k·log(2/δ)))² }
/// eta = a δ² λ / r²
/// m   = ⌈c′ log(2/δ) / (eta λ)⌉
/// ```
pub fn select_parameters(
    lambda_hat: f64,
    r: f64,
    k: usize,
    delta: f64,
    consts: &SolverConstants,
) -> Result<StepParameters> {
    if !(lambda_hat > 0.0) {
        return Err(Error::NonPositiveGap(lambda_hat));
    }
    if !(r > 0.0) {
        return Err(Error::invalid(format!("r = {r} must be positive")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    let SolverConstants {
        c, c_prime, c_second, ..
    } = *consts;
    let log_term = (2.0 / delta).ln();
    let kf = k as f64;
    let d2 = delta * delta;
    let a = c
        .min(c_second / (4.0 * d2 * c * kf * log_term))
        .min((1.0 / (4.0 * d2 * c)) * (c_second / (kf * log_term)).powi(2));
    let eta = a * d2 * lambda_hat / (r * r);
    let m = (c_prime * log_term / (eta * lambda_hat)).ceil();
    if !m.is_finite() || m > u64::MAX as f64 {
        return Err(Error::invalid(format!("epoch length {m} is not representable")));
    }
    Ok(StepParameters {
        eta,
        m: (m as usize).max(1),
        a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_consts() -> SolverConstants {
        SolverConstants {
            c: 1.0,
            c_prime: 1.0,
            c_second: 1.0,
            ..SolverConstants::default()
        }
    }

    #[test]
    fn footnote_formula_value() {
        let p = select_parameters(0.3, 1.0, 1, 0.1, &unit_consts()).unwrap();
        // min{1, 8.34.., 2.78..} = 1, so eta = 0.01 * 0.3.
        let l = 20f64.ln();
        let a = 1f64
            .min(1.0 / (4.0 * 0.01 * l))
            .min((1.0 / (4.0 * 0.01)) * (1.0 / l).powi(2));
        assert_eq!(a, 1.0);
        assert!((p.eta - 0.003).abs() < 1e-18);
        assert_eq!(p.m, (l / (0.003 * 0.3)).ceil() as usize);
    }

    #[test]
    fn doubling_r_scales_eta_and_m() {
        let c = SolverConstants::default();
        let p1 = select_parameters(0.2, 1.5, 2, 0.2, &c).unwrap();
        let p2 = select_parameters(0.2, 3.0, 2, 0.2, &c).unwrap();
        assert!((p2.eta * 4.0 - p1.eta).abs() <= 1e-15 * p1.eta);
        assert!(p2.m + 3 >= 4 * p1.m && p2.m <= 4 * p1.m);
    }

    #[test]
    fn halving_delta_never_increases_eta() {
        let c = SolverConstants::default();
        let mut delta = 0.9;
        for k in [1, 3, 10] {
            for _ in 0..12 {
                let a = select_parameters(0.1, 2.0, k, delta, &c).unwrap();
                let b = select_parameters(0.1, 2.0, k, delta / 2.0, &c).unwrap();
                assert!(b.eta <= a.eta, "k={k} delta={delta}");
                delta /= 2.0;
            }
            delta = 0.9;
        }
    }

    #[test]
    fn nonpositive_gap_is_rejected() {
        assert!(matches!(
            select_parameters(0.0, 1.0, 1, 0.1, &SolverConstants::default()),
            Err(Error::NonPositiveGap(_))
        ));
        assert!(select_parameters(-0.1, 1.0, 1, 0.1, &SolverConstants::default()).is_err());
        assert!(select_parameters(0.1, 0.0, 1, 0.1, &SolverConstants::default()).is_err());
    }
}
