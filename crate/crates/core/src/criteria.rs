//! One-shot separability criteria. Each returns a [`Verdict`] whose margin is
//! the signed distance from the decision threshold (positive = passes).

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, realign, singular_values, tensor, ComplexMatrix, DensityMatrix, Side, PSD_REL_TOL,
};
use crate::symext::{self, ExtensionOptions, ExtensionStatus};

/// Absolute tolerance on majorization prefix sums.
pub const PREFIX_SUM_TOL: f64 = 1e-10;
/// Absolute tolerance on entropy differences (bits) and the cross-norm margin.
pub const SCALAR_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Ppt,
    Reduction,
    #[serde(rename = "entropic-2")]
    Entropic2,
    EntropicVonNeumann,
    Majorization,
    CrossNorm,
    SymmetricExtension,
}

impl Criterion {
    pub const ONE_SHOT: [Criterion; 6] = [
        Criterion::Ppt,
        Criterion::Reduction,
        Criterion::Entropic2,
        Criterion::EntropicVonNeumann,
        Criterion::Majorization,
        Criterion::CrossNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Ppt => "ppt",
            Criterion::Reduction => "reduction",
            Criterion::Entropic2 => "entropic-2",
            Criterion::EntropicVonNeumann => "entropic-von-neumann",
            Criterion::Majorization => "majorization",
            Criterion::CrossNorm => "cross-norm",
            Criterion::SymmetricExtension => "symmetric-extension",
        }
    }

    /// Parses a CLI token; `entropic` expands to both orders.
    pub fn parse_list(token: &str) -> Result<Vec<Criterion>> {
        Ok(match token.trim().to_ascii_lowercase().as_str() {
            "ppt" => vec![Criterion::Ppt],
            "reduction" => vec![Criterion::Reduction],
            "entropic" => vec![Criterion::Entropic2, Criterion::EntropicVonNeumann],
            "entropic2" | "entropic-2" => vec![Criterion::Entropic2],
            "entropic-vn" | "entropic-von-neumann" | "vonneumann" => vec![Criterion::EntropicVonNeumann],
            "majorization" => vec![Criterion::Majorization],
            "crossnorm" | "cross-norm" | "realignment" => vec![Criterion::CrossNorm],
            "symext" | "symmetric-extension" => vec![Criterion::SymmetricExtension],
            other => return Err(Error::Parse(format!("unknown criterion '{other}'"))),
        })
    }
}

/// Order of the Rényi entropy used by the entropic criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenyiOrder {
    Two,
    VonNeumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub criterion: Criterion,
    pub outcome: Outcome,
    /// `false` only when the criterion detects entanglement.
    pub passed: bool,
    pub margin: f64,
    pub tol: f64,
    pub details: Value,
}

impl Verdict {
    pub(crate) fn new(criterion: Criterion, margin: f64, tol: f64, details: Value) -> Self {
        let outcome = if margin >= -tol { Outcome::Pass } else { Outcome::Fail };
        Verdict { criterion, outcome, passed: outcome != Outcome::Fail, margin, tol, details }
    }
}

fn spectral_tol(eigs: &[f64]) -> f64 {
    PSD_REL_TOL * eigs.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE)
}

pub fn ppt_test(rho: &DensityMatrix) -> Result<Verdict> {
    let eigs = hermitian_eigenvalues(&rho.partial_transpose())?;
    let margin = *eigs.last().expect("non-empty spectrum");
    Ok(Verdict::new(Criterion::Ppt, margin, spectral_tol(&eigs), json!({ "partial_transpose_spectrum": eigs })))
}

/// Checks `I ⊗ rho_B >= rho` and `rho_A ⊗ I >= rho`.
pub fn reduction_test(rho: &DensityMatrix) -> Result<Verdict> {
    let shape = rho.shape();
    let rho_a = rho.reduced(Side::A);
    let rho_b = rho.reduced(Side::B);
    let b_side = &tensor(&ComplexMatrix::identity(shape.dim_a), &rho_b) - rho.matrix();
    let a_side = &tensor(&rho_a, &ComplexMatrix::identity(shape.dim_b)) - rho.matrix();
    let eb = hermitian_eigenvalues(&b_side)?;
    let ea = hermitian_eigenvalues(&a_side)?;
    let mb = *eb.last().expect("non-empty");
    let ma = *ea.last().expect("non-empty");
    let tol = spectral_tol(&eb).max(spectral_tol(&ea));
    Ok(Verdict::new(
        Criterion::Reduction,
        ma.min(mb),
        tol,
        json!({ "min_eig_identity_tensor_rho_b": mb, "min_eig_rho_a_tensor_identity": ma }),
    ))
}

/// Rényi entropy in bits of a spectrum; non-positive eigenvalues contribute 0.
pub fn renyi_entropy(eigs: &[f64], order: RenyiOrder) -> f64 {
    match order {
        RenyiOrder::Two => {
            let purity: f64 = eigs.iter().filter(|&&x| x > 0.0).map(|x| x * x).sum();
            -purity.log2()
        }
        RenyiOrder::VonNeumann => -eigs.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>(),
    }
}

pub fn entropic_test(rho: &DensityMatrix, order: RenyiOrder) -> Result<Verdict> {
    let s_ab = renyi_entropy(&rho.eigenvalues(), order);
    let s_a = renyi_entropy(&hermitian_eigenvalues(&rho.reduced(Side::A))?, order);
    let s_b = renyi_entropy(&hermitian_eigenvalues(&rho.reduced(Side::B))?, order);
    let criterion = match order {
        RenyiOrder::Two => Criterion::Entropic2,
        RenyiOrder::VonNeumann => Criterion::EntropicVonNeumann,
    };
    Ok(Verdict::new(
        criterion,
        (s_ab - s_a).min(s_ab - s_b),
        SCALAR_TOL,
        json!({ "s_ab": s_ab, "s_a": s_a, "s_b": s_b, "log_base": 2 }),
    ))
}

/// Most negative value of `sum_{i<=k} x_i - sum_{i<=k} y_i` over all `k`,
/// shorter list zero-padded. Both inputs must be sorted non-increasing.
pub fn majorization_gap(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().max(y.len());
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut worst = f64::INFINITY;
    for i in 0..n {
        sx += x.get(i).copied().unwrap_or(0.0);
        sy += y.get(i).copied().unwrap_or(0.0);
        worst = worst.min(sx - sy);
    }
    worst
}

pub fn majorization_test(rho: &DensityMatrix) -> Result<Verdict> {
    let l_ab = rho.eigenvalues();
    let l_a = hermitian_eigenvalues(&rho.reduced(Side::A))?;
    let l_b = hermitian_eigenvalues(&rho.reduced(Side::B))?;
    let gap_a = majorization_gap(&l_a, &l_ab);
    let gap_b = majorization_gap(&l_b, &l_ab);
    Ok(Verdict::new(
        Criterion::Majorization,
        gap_a.min(gap_b),
        PREFIX_SUM_TOL,
        json!({ "spectrum_ab": l_ab, "spectrum_a": l_a, "spectrum_b": l_b, "gap_a": gap_a, "gap_b": gap_b }),
    ))
}

pub fn cross_norm_test(rho: &DensityMatrix) -> Result<Verdict> {
    let sv = singular_values(&realign(rho.matrix(), rho.shape())?);
    let norm: f64 = sv.iter().sum();
    Ok(Verdict::new(
        Criterion::CrossNorm,
        1.0 - norm,
        SCALAR_TOL,
        json!({ "realigned_trace_norm": norm, "singular_values": sv }),
    ))
}

/// Symmetric-extension verdict: fails only on infeasibility evidence;
/// inconclusive runs pass with margin 0 and say so in the details.
pub fn symext_test(rho: &DensityMatrix, k: usize, opts: &ExtensionOptions) -> Result<Verdict> {
    let res = symext::has_symmetric_extension(rho, k, opts)?;
    let (outcome, margin) = match res.status {
        ExtensionStatus::InfeasibleEvidence => (Outcome::Fail, res.certificate.unwrap_or(-res.residual)),
        ExtensionStatus::Feasible => (Outcome::Pass, 0.0),
        ExtensionStatus::Inconclusive => (Outcome::Inconclusive, 0.0),
    };
    Ok(Verdict {
        criterion: Criterion::SymmetricExtension,
        outcome,
        passed: outcome != Outcome::Fail,
        margin,
        tol: opts.tol,
        details: json!({
            "k": k,
            "status": res.status,
            "residual": res.residual,
            "iterations": res.iterations,
            "certificate": res.certificate,
        }),
    })
}

pub fn run_criterion(rho: &DensityMatrix, criterion: Criterion, opts: &RunOptions) -> Result<Verdict> {
    match criterion {
        Criterion::Ppt => ppt_test(rho),
        Criterion::Reduction => reduction_test(rho),
        Criterion::Entropic2 => entropic_test(rho, RenyiOrder::Two),
        Criterion::EntropicVonNeumann => entropic_test(rho, RenyiOrder::VonNeumann),
        Criterion::Majorization => majorization_test(rho),
        Criterion::CrossNorm => cross_norm_test(rho),
        Criterion::SymmetricExtension => symext_test(rho, opts.symext_k, &opts.symext),
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub symext_k: usize,
    pub symext: ExtensionOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { symext_k: 2, symext: ExtensionOptions::default() }
    }
}

/// Every one-shot criterion plus the symmetric extension at `opts.symext_k`.
pub fn run_all(rho: &DensityMatrix, opts: &RunOptions) -> Result<Vec<Verdict>> {
    Criterion::ONE_SHOT
        .iter()
        .chain(std::iter::once(&Criterion::SymmetricExtension))
        .map(|&c| run_criterion(rho, c, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BipartiteShape;
    use crate::states::{max_entangled, random_product_pure};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn bell_state_fails_everything() {
        let phi = max_entangled(2).unwrap();
        let v = ppt_test(&phi).unwrap();
        assert!(!v.passed && close(v.margin, -0.5));
        let v = reduction_test(&phi).unwrap();
        assert!(!v.passed && close(v.margin, -0.5));
        let v = entropic_test(&phi, RenyiOrder::Two).unwrap();
        assert!(!v.passed && close(v.margin, -1.0));
        let v = entropic_test(&phi, RenyiOrder::VonNeumann).unwrap();
        assert!(!v.passed && close(v.margin, -1.0));
        let v = majorization_test(&phi).unwrap();
        assert!(!v.passed && close(v.margin, -0.5));
        let v = cross_norm_test(&phi).unwrap();
        assert!(!v.passed && close(v.margin, -1.0));
    }

    #[test]
    fn cross_norm_of_max_entangled_is_d() {
        for d in 2..=5 {
            let v = cross_norm_test(&max_entangled(d).unwrap()).unwrap();
            assert!(close(v.margin, 1.0 - d as f64));
        }
    }

    #[test]
    fn maximally_mixed_two_qubits() {
        let rho = DensityMatrix::maximally_mixed(BipartiteShape::square(2).unwrap());
        assert!(close(reduction_test(&rho).unwrap().margin, 0.25));
        assert!(close(entropic_test(&rho, RenyiOrder::Two).unwrap().margin, 1.0));
        let m = majorization_test(&rho).unwrap();
        // prefix sums meet at k = 4 where both reach 1
        assert!(m.passed && close(m.margin, 0.0));
        assert!(close(cross_norm_test(&rho).unwrap().margin, 0.5));
        assert!(close(ppt_test(&rho).unwrap().margin, 0.25));
    }

    #[test]
    fn pure_product_passes_at_the_boundary() {
        let rho = random_product_pure(BipartiteShape::new(2, 3).unwrap(), 8);
        let c = cross_norm_test(&rho).unwrap();
        assert!(c.passed && c.margin.abs() < 1e-9);
        let m = majorization_test(&rho).unwrap();
        assert!(m.passed && m.margin.abs() < 1e-9);
        assert!(reduction_test(&rho).unwrap().passed);
        assert!(entropic_test(&rho, RenyiOrder::Two).unwrap().passed);
        assert!(ppt_test(&rho).unwrap().passed);
    }

    #[test]
    fn majorization_gap_pads() {
        assert!(close(majorization_gap(&[0.5, 0.5], &[0.25; 4]), 0.0));
        assert!(close(majorization_gap(&[0.5, 0.5], &[1.0]), -0.5));
    }

    #[test]
    fn parse_criterion_names() {
        assert_eq!(Criterion::parse_list("entropic").unwrap().len(), 2);
        assert_eq!(Criterion::parse_list("crossnorm").unwrap(), vec![Criterion::CrossNorm]);
        assert!(Criterion::parse_list("bogus").is_err());
    }
}
