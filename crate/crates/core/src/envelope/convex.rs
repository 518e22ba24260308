use rayon::prelude::*;

use super::{EnvelopeResult, TOL_CONTACT};
use crate::error::{Error, Result};
use crate::legendre::convexify;
use crate::torus::{monge_ampere_unchecked, QuasiPeriodicConvex, ScalarField};

/// Largest convex quasi-periodic function below `φ₀ + t·H`.
///
/// `projected` holds the periodic part of the envelope; the coincidence
/// mask marks nodes where it touches the obstacle. `residual` is the
/// Monge–Ampère mass the envelope puts on the non-coincidence set.
pub fn project_convex(phi0: &QuasiPeriodicConvex, hamiltonian: &ScalarField, t: f64) -> EnvelopeResult {
    let obstacle = phi0.periodic().axpy(t, hamiltonian);
    project_obstacle(&obstacle)
}

/// Convex envelope of an arbitrary periodic obstacle.
pub fn project_obstacle(obstacle: &ScalarField) -> EnvelopeResult {
    let projected = convexify(obstacle).into_periodic();
    let coincidence: Vec<bool> =
        projected.values().iter().zip(obstacle.values()).map(|(p, f)| *p >= f - TOL_CONTACT).collect();
    let ma = monge_ampere_unchecked(&projected);
    let residual = ma.masses().iter().zip(&coincidence).filter(|(_, c)| !**c).map(|(m, _)| *m).sum();
    EnvelopeResult { projected, coincidence, residual, iterations: 1 }
}

/// Envelopes `P(φ₀ + t·H)` for every `t` in an increasing list.
pub fn envelope_curve(
    phi0: &QuasiPeriodicConvex,
    hamiltonian: &ScalarField,
    t_list: &[f64],
) -> Result<Vec<EnvelopeResult>> {
    check_times(t_list)?;
    Ok(t_list.par_iter().map(|&t| project_convex(phi0, hamiltonian, t)).collect())
}

pub(crate) fn check_times(t_list: &[f64]) -> Result<()> {
    for (i, &t) in t_list.iter().enumerate() {
        if !(t >= 0.0) || !t.is_finite() || (i > 0 && t <= t_list[i - 1]) {
            return Err(Error::NonMonotoneT(i));
        }
    }
    Ok(())
}

/// Worst violations of the three laws an envelope curve obeys.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CurveLaws {
    /// Largest positive divided second difference in `t` (concavity).
    pub concavity: f64,
    /// Largest increase of `projected − t·H` between consecutive times.
    pub monotonicity: f64,
    /// Nodes in Ω at some time that leave Ω later.
    pub nesting: usize,
}

impl CurveLaws {
    pub fn holds(&self, tol: f64) -> bool {
        self.concavity <= tol && self.monotonicity <= tol && self.nesting == 0
    }
}

/// Measure concavity in `t`, decrease of `projected − t·H` and nesting of Ω.
pub fn curve_laws(curve: &[EnvelopeResult], hamiltonian: &ScalarField, t_list: &[f64]) -> CurveLaws {
    assert_eq!(curve.len(), t_list.len());
    let mut laws = CurveLaws::default();
    let hv = hamiltonian.values();
    for w in 1..curve.len() {
        let (a, b) = (&curve[w - 1], &curve[w]);
        let (ta, tb) = (t_list[w - 1], t_list[w]);
        #[allow(clippy::needless_range_loop)] // k indexes four parallel arrays
        for k in 0..hv.len() {
            let da = a.projected.values()[k] - ta * hv[k];
            let db = b.projected.values()[k] - tb * hv[k];
            laws.monotonicity = laws.monotonicity.max(db - da);
            if !a.coincidence[k] && b.coincidence[k] {
                laws.nesting += 1;
            }
        }
        if w + 1 < curve.len() {
            let c = &curve[w + 1];
            let tc = t_list[w + 1];
            for k in 0..hv.len() {
                let s1 = (b.projected.values()[k] - a.projected.values()[k]) / (tb - ta);
                let s2 = (c.projected.values()[k] - b.projected.values()[k]) / (tc - tb);
                laws.concavity = laws.concavity.max(s2 - s1);
            }
        }
    }
    laws
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::PeriodicGrid;
    use std::f64::consts::PI;

    fn cosine(n: usize) -> (QuasiPeriodicConvex, ScalarField) {
        let g = PeriodicGrid::line(n).unwrap();
        (QuasiPeriodicConvex::quadratic(g), ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).cos()))
    }

    #[test]
    fn time_zero_is_identity() {
        let (phi0, h) = cosine(64);
        let r = project_convex(&phi0, &h, 0.0);
        assert_eq!(r.projected, *phi0.periodic());
        assert!(r.coincidence.iter().all(|&c| c));
    }

    #[test]
    fn before_first_shock_nothing_moves() {
        let (phi0, h) = cosine(256);
        let t = 0.9 / (4.0 * PI * PI);
        let r = project_convex(&phi0, &h, t);
        assert!(r.coincidence.iter().all(|&c| c));
        assert!(r.projected.sup_dist(&h.scaled(t)) < 1e-12);
    }

    #[test]
    fn after_first_shock_a_free_region_opens() {
        let (phi0, h) = cosine(256);
        let r = project_convex(&phi0, &h, 1.0);
        let free = r.coincidence.iter().filter(|&&c| !c).count();
        assert!(free > 0);
        assert!(r.residual < 1e-10, "{}", r.residual);
    }

    #[test]
    fn rejects_unsorted_times() {
        let (phi0, h) = cosine(32);
        assert!(matches!(envelope_curve(&phi0, &h, &[0.0, 0.5, 0.5]), Err(Error::NonMonotoneT(2))));
        assert!(matches!(envelope_curve(&phi0, &h, &[-0.1, 0.5]), Err(Error::NonMonotoneT(0))));
    }

    #[test]
    fn zero_hamiltonian_curve_is_constant() {
        let (phi0, _) = cosine(32);
        let zero = ScalarField::zeros(*phi0.grid());
        let ts = [0.0, 0.3, 0.9];
        let curve = envelope_curve(&phi0, &zero, &ts).unwrap();
        assert!(curve.iter().all(|r| r.projected == *phi0.periodic()));
    }

    #[test]
    fn idempotent_and_contractive() {
        let (phi0, h) = cosine(128);
        let a = project_convex(&phi0, &h, 0.7);
        let again = project_obstacle(&a.projected);
        assert!(again.projected.sup_dist(&a.projected) <= 1e-12);
        let b = project_convex(&phi0, &h, 0.75);
        let gap = h.scaled(0.7).sup_dist(&h.scaled(0.75));
        assert!(a.projected.sup_dist(&b.projected) <= gap + 1e-12);
    }
}
