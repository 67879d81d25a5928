use super::{ForwardSolution, SolveStatus};
use crate::domain::{Custom1d, UtilityForm};
use crate::error::{Error, Result};

/// Exact case analysis for the scalar agents over `[lo, hi]`.
pub fn solve_custom_1d(theta: f64, kind: Custom1d, lo: f64, hi: f64) -> Result<ForwardSolution> {
    let x = match kind {
        // f = x away from zero and −θ at zero.
        Custom1d::Obscuring => {
            let zero_inside = lo <= 0.0 && 0.0 <= hi;
            if !zero_inside {
                lo
            } else if lo == 0.0 {
                if theta >= 0.0 {
                    0.0
                } else {
                    return Err(Error::Solver(format!(
                        "no minimizer on [{lo}, {hi}] at θ = {theta}: infimum approached as x → 0+"
                    )));
                }
            } else if -theta <= lo {
                0.0
            } else {
                lo
            }
        }
        Custom1d::Linear => {
            if theta > 0.0 {
                lo
            } else if theta < 0.0 {
                hi
            } else {
                0.0_f64.clamp(lo, hi)
            }
        }
    };
    ForwardSolution::finish(vec![x], &[theta], &UtilityForm::Custom1d(kind), SolveStatus::Optimal, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obscuring(theta: f64) -> f64 {
        solve_custom_1d(theta, Custom1d::Obscuring, -1.0, 1.0).unwrap().x[0]
    }

    #[test]
    fn obscuring_agent_cases() {
        assert_eq!(obscuring(-1.0), -1.0);
        assert_eq!(obscuring(0.0), -1.0);
        assert_eq!(obscuring(0.999), -1.0);
        assert_eq!(obscuring(1.0), 0.0);
        assert_eq!(obscuring(3.0), 0.0);
    }

    #[test]
    fn linear_agent_cases() {
        let x = |t| solve_custom_1d(t, Custom1d::Linear, -1.0, 1.0).unwrap().x[0];
        assert_eq!(x(1.0), -1.0);
        assert_eq!(x(-0.5), 1.0);
        assert_eq!(x(0.0), 0.0);
    }
}
