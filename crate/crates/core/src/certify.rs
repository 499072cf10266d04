//! Certified upper bounds on the worst-case erasure error.
//!
//! Both certificates exhibit an explicit environment state per erasure event
//! and combine (a) how well that state approximates every logical input's
//! environment output with (b) how strongly the environment can see logical
//! coherences. The result is a rigorous upper bound, never an estimate.

use serde::{Deserialize, Serialize};

use crate::codespace::CovariantCode;
use crate::noise::{reduced_family, ErasureModel, ReducedFamily};
use crate::numkit::{sparse_fidelity, sparse_trace_norm};
use crate::{Error, Result};

/// A certified upper bound `eps_worst <= eps_prime + d_L * sqrt(nu)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub method: String,
    /// Per-event proximity defect `eps'_a = sqrt(2 (1 - F_a))`.
    pub per_event_eps: Vec<f64>,
    /// Per-event coherence leakage `nu_a = max_{x != x'} |rho_a^{x,x'}|_1`.
    pub per_event_nu: Vec<f64>,
    /// Worst proximity defect over events.
    pub eps_prime: f64,
    /// Worst coherence leakage over events.
    pub nu: f64,
    pub d_l: usize,
    /// The certified upper bound on the worst-case error.
    pub bound: f64,
}

impl Certificate {
    fn assemble(method: &str, eps: Vec<f64>, nu: Vec<f64>, d_l: usize) -> Self {
        let eps_prime = eps.iter().cloned().fold(0.0f64, f64::max);
        let nu_max = nu.iter().cloned().fold(0.0f64, f64::max);
        Certificate {
            method: method.into(),
            per_event_eps: eps,
            per_event_nu: nu,
            eps_prime,
            nu: nu_max,
            d_l,
            bound: eps_prime + d_l as f64 * nu_max.sqrt(),
        }
    }
}

fn coherence_leakage(fam: &ReducedFamily, d_l: usize) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..d_l {
        for xp in (x + 1)..d_l {
            if fam.has_pair(x, xp) {
                worst = worst.max(sparse_trace_norm(fam.entries(x, xp), fam.dim()));
            }
        }
    }
    worst
}

fn gather(code: &CovariantCode, model: &ErasureModel) -> Result<Vec<ReducedFamily>> {
    model.validate(code.n_subsystems)?;
    model
        .events
        .iter()
        .map(|ev| reduced_family(code, &ev.alpha))
        .collect()
}

/// Certificate from a fixed reference environment state: for each event the
/// environment output of logical basis index `reference` serves as the
/// decoupled target, and the defect is its worst root-fidelity distance to
/// any other basis input's output.
pub fn certify_reference(
    code: &CovariantCode,
    model: &ErasureModel,
    reference: usize,
) -> Result<Certificate> {
    let d_l = code.d_l();
    if reference >= d_l {
        return Err(Error::InvalidArgument(format!(
            "reference index {reference} out of range for dimension {d_l}"
        )));
    }
    let fams = gather(code, model)?;
    let mut eps = Vec::with_capacity(fams.len());
    let mut nu = Vec::with_capacity(fams.len());
    for fam in &fams {
        let zeta = fam.entries(reference, reference);
        let mut f_min = 1.0f64;
        for x in 0..d_l {
            if x == reference {
                continue;
            }
            let f = sparse_fidelity(fam.entries(x, x), zeta, fam.dim())?;
            f_min = f_min.min(f);
        }
        eps.push((2.0 * (1.0 - f_min).max(0.0)).sqrt());
        nu.push(coherence_leakage(fam, d_l));
    }
    Ok(Certificate::assemble("reference state", eps, nu, d_l))
}

/// Certificate from the entrywise minorization of the diagonal environment
/// outputs. Requires every `rho_a^{x,x}` to be diagonal in the stored label
/// basis; otherwise no common eigenbasis is available and the method refuses.
pub fn certify_minorization(code: &CovariantCode, model: &ErasureModel) -> Result<Certificate> {
    let d_l = code.d_l();
    let fams = gather(code, model)?;
    let mut eps = Vec::with_capacity(fams.len());
    let mut nu = Vec::with_capacity(fams.len());
    for fam in &fams {
        let dim = fam.dim();
        let mut tau = vec![f64::INFINITY; dim];
        for x in 0..d_l {
            let mut diag = vec![0.0f64; dim];
            for &(r, c, v) in fam.entries(x, x) {
                if r != c {
                    if v.norm() > 1e-12 {
                        return Err(Error::NonCommutingFamily);
                    }
                    continue;
                }
                if v.im.abs() > 1e-12 || v.re < -1e-12 {
                    return Err(Error::NotPsd(v.re.min(-v.im.abs())));
                }
                diag[r] += v.re;
            }
            for (t, &d) in tau.iter_mut().zip(diag.iter()) {
                *t = t.min(d.max(0.0));
            }
        }
        let trace: f64 = tau.iter().sum();
        eps.push((2.0 * (1.0 - trace).max(0.0)).sqrt());
        nu.push(coherence_leakage(fam, d_l));
    }
    Ok(Certificate::assemble("diagonal minorization", eps, nu, d_l))
}
