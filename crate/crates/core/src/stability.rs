//! Linear stability of steady states.
//!
//! The linearization around `U` is
//!
//! ```text
//! L φ = D φ_xx + A φ - M C ∫ C φ,   A = kappa e^U / ∫ e^U - 1,
//! C = e^U,   M = kappa / (∫ e^U)²,
//! ```
//!
//! a rank-one perturbation of the local operator `D ∂xx + A`. Its spectrum is
//! computed twice: directly from the Galerkin matrix, and from the local
//! eigenpairs `(λ_n, ψ_n)` through the secular equation
//! `1/M = Σ β_n² / (λ_n - ν)` with `β_n = ∫ C ψ_n`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::basis;
use crate::energy::log_partition;
use crate::error::{Error, Result};
use crate::grid::{gradient, Field};
use crate::linalg::symmetric_eigen_desc;
use crate::steady::SteadyState;

/// `|ν| ≤ VERDICT_TOL` is marginal.
pub const VERDICT_TOL: f64 = 1e-8;
/// Relative size below which a coupling coefficient counts as zero.
pub const BETA_TOL: f64 = 1e-9;
/// Local eigenvalues closer than this are merged in the secular equation.
pub const MERGE_TOL: f64 = 1e-9;
/// Initial distance of the bisection brackets from the poles.
pub const BRACKET_SHRINK: f64 = 1e-10;
/// Absolute bisection tolerance.
pub const BISECTION_TOL: f64 = 1e-12;
/// Number of leading eigenvalues compared by the cross-check.
pub const CROSSCHECK_COUNT: usize = 10;
pub const CROSSCHECK_TOL: f64 = 1e-6;
/// Overlap with `U_x` above which an eigenvector is the translation mode.
pub const TRANSLATION_OVERLAP: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

impl Verdict {
    pub fn from_leading(nu: f64) -> Self {
        if nu > VERDICT_TOL {
            Verdict::Unstable
        } else if nu >= -VERDICT_TOL {
            Verdict::Marginal
        } else {
            Verdict::Stable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Marginal => "marginal",
            Verdict::Unstable => "unstable",
        }
    }
}

/// Eigenpairs of the local operator `D ∂xx + A`, sorted decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSpectrum {
    pub lambdas: Vec<f64>,
    /// L²-orthonormal eigenfunctions.
    pub eigenfunctions: Vec<Field>,
    /// Sign changes per period of each eigenfunction.
    pub zero_counts: Vec<usize>,
}

/// A secular root with the open interval it was bracketed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketedRoot {
    pub root: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecularRoots {
    /// Secular roots together with the passed-through local eigenvalues,
    /// sorted decreasing.
    pub values: Vec<f64>,
    pub bracketed: Vec<BracketedRoot>,
    /// Local eigenvalues that are nonlocal eigenvalues verbatim: those with
    /// vanishing coupling and the surplus copies of merged clusters.
    pub passthrough: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslationMode {
    pub index: usize,
    pub nu: f64,
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub local: LocalSpectrum,
    pub betas: Vec<f64>,
    pub m: f64,
    /// Direct-matrix eigenvalues, sorted decreasing.
    pub nonlocal_eigs: Vec<f64>,
    /// Secular-route eigenvalues.
    pub secular: SecularRoots,
    /// Largest deviation between the routes over the leading eigenvalues.
    pub crosscheck_error: f64,
    pub translation: Option<TranslationMode>,
    /// Largest eigenvalue other than the translation mode.
    pub leading_nu: f64,
    pub verdict: Verdict,
    /// Whether `U_x` has at least three sign changes, the case in which
    /// instability follows from the spectral theory alone. For a 1-modal
    /// state it has two and the verdict rests on the computed spectrum only.
    pub instability_theorem_applies: bool,
}

fn modes_for(u: &SteadyState) -> usize {
    basis::default_modes(u.field.grid())
}

/// Galerkin matrix of the linearization in the truncated trigonometric basis.
pub fn assemble_linearization(u: &SteadyState, n_modes: usize) -> Result<DMatrix<f64>> {
    basis::check_modes(u.field.grid(), n_modes)?;
    let (_, rho) = log_partition(&u.field)?;
    let kappa = u.params.kappa();
    let mut l = basis::multiplication_matrix(&rho.map(|r| kappa * r - 1.0), n_modes);
    let b = basis::multiplication_matrix(&rho, n_modes).column(0).into_owned();
    l -= &b * b.transpose() * kappa;
    for i in 0..l.nrows() {
        l[(i, i)] -= u.params.d() * basis::eigenvalue(i);
    }
    Ok((&l + l.transpose()) * 0.5)
}

fn local_matrix(u: &SteadyState, n_modes: usize) -> Result<DMatrix<f64>> {
    let (_, rho) = log_partition(&u.field)?;
    let kappa = u.params.kappa();
    let mut l = basis::multiplication_matrix(&rho.map(|r| kappa * r - 1.0), n_modes);
    for i in 0..l.nrows() {
        l[(i, i)] -= u.params.d() * basis::eigenvalue(i);
    }
    Ok(l)
}

/// Sign changes per period, ignoring values below `1e-7` of the maximum
/// (localized eigenfunctions decay into roundoff far from the peak).
pub fn sign_changes(f: &Field) -> usize {
    let tol = 1e-7 * f.norm_inf();
    let signs: Vec<bool> = f
        .values()
        .iter()
        .filter(|v| v.abs() > tol)
        .map(|&v| v > 0.0)
        .collect();
    if signs.is_empty() {
        return 0;
    }
    (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count()
}

/// Number of leading local eigenfunctions whose zero counts are checked.
const ZERO_COUNT_CHECKED: usize = 11;

pub fn local_spectrum(u: &SteadyState, n_modes: usize) -> Result<LocalSpectrum> {
    basis::check_modes(u.field.grid(), n_modes)?;
    let (lambdas, vectors) = symmetric_eigen_desc(local_matrix(u, n_modes)?)?;
    let grid = u.field.grid();
    let sampled = basis::sample(grid, n_modes) * vectors;
    let eigenfunctions: Vec<Field> = sampled
        .column_iter()
        .map(|c| Field::from_raw(grid, c.iter().copied().collect()))
        .collect();
    let zero_counts: Vec<usize> = eigenfunctions.iter().map(sign_changes).collect();
    if lambdas.len() > 1 && lambdas[0] - lambdas[1] <= 1e-10 {
        return Err(Error::Resolution(format!(
            "leading local eigenvalue is not simple: {} vs {}",
            lambdas[0], lambdas[1]
        )));
    }
    for (i, &z) in zero_counts.iter().enumerate().take(ZERO_COUNT_CHECKED) {
        let expected = 2 * ((i + 1) / 2);
        if z != expected {
            return Err(Error::Resolution(format!(
                "local eigenfunction {i} has {z} sign changes, expected {expected}"
            )));
        }
    }
    Ok(LocalSpectrum {
        lambdas,
        eigenfunctions,
        zero_counts,
    })
}

/// Coupling coefficients `β_n = ∫ e^U ψ_n` and `M = kappa / (∫ e^U)²`.
pub fn couplings(u: &SteadyState, local: &LocalSpectrum) -> Result<(Vec<f64>, f64)> {
    let (log_z, rho) = log_partition(&u.field)?;
    let z = libm::exp(log_z);
    let betas = local
        .eigenfunctions
        .iter()
        .map(|psi| z * rho.dot(psi))
        .collect();
    let m = u.params.kappa() * libm::exp(-2.0 * log_z);
    Ok((betas, m))
}

fn secular_fn(poles: &[(f64, f64)], m: f64, nu: f64) -> f64 {
    poles.iter().map(|(l, b2)| b2 / (l - nu)).sum::<f64>() - 1.0 / m
}

fn bisect(poles: &[(f64, f64)], m: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular_fn(poles, m, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `1/M = Σ β_n² / (λ_n - ν)` plus the local eigenvalues that carry
/// over unchanged, sorted decreasing.
pub fn secular_roots(local: &LocalSpectrum, betas: &[f64], m: f64) -> Result<SecularRoots> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Config(format!("M must be positive, got {m}")));
    }
    if betas.len() != local.lambdas.len() {
        return Err(Error::Config(format!(
            "{} coupling coefficients for {} eigenvalues",
            betas.len(),
            local.lambdas.len()
        )));
    }
    let beta_norm = libm::sqrt(betas.iter().map(|b| b * b).sum::<f64>());
    let threshold = BETA_TOL * beta_norm;
    let mut passthrough = Vec::new();
    // (lambda, merged β²) in decreasing lambda order
    let mut poles: Vec<(f64, f64)> = Vec::new();
    let mut order: Vec<usize> = (0..betas.len()).collect();
    order.sort_by(|&a, &b| local.lambdas[b].total_cmp(&local.lambdas[a]));
    for &i in &order {
        let (lambda, beta) = (local.lambdas[i], betas[i]);
        if beta.abs() <= threshold {
            passthrough.push(lambda);
            continue;
        }
        match poles.last_mut() {
            Some((l, b2)) if (*l - lambda).abs() < MERGE_TOL => {
                *b2 += beta * beta;
                passthrough.push(lambda);
            }
            _ => poles.push((lambda, beta * beta)),
        }
    }

    let mut bracketed = Vec::new();
    for w in poles.windows(2) {
        let (upper, lower) = (w[0].0, w[1].0);
        let mut shrink = f64::min(BRACKET_SHRINK, 0.25 * (upper - lower));
        let floor = 4.0 * f64::EPSILON * f64::max(1.0, f64::max(upper.abs(), lower.abs()));
        let root = loop {
            let (lo, hi) = (lower + shrink, upper - shrink);
            let (flo, fhi) = (secular_fn(&poles, m, lo), secular_fn(&poles, m, hi));
            if !(flo.is_finite() && fhi.is_finite()) {
                return Err(Error::Bracket { lower, upper });
            }
            if flo < 0.0 && fhi > 0.0 {
                break bisect(&poles, m, lo, hi);
            }
            if shrink <= floor {
                // the root sits within rounding distance of a pole
                break if flo >= 0.0 { lo } else { hi };
            }
            shrink = f64::max(shrink * 1e-2, floor);
        };
        bracketed.push(BracketedRoot { root, lower, upper });
    }
    if let Some(&(d_min, _)) = poles.last() {
        let w: f64 = poles.iter().map(|p| p.1).sum();
        let lower = d_min - m * w - 1.0;
        let mut shrink = BRACKET_SHRINK;
        let floor = 4.0 * f64::EPSILON * f64::max(1.0, d_min.abs());
        let root = loop {
            let hi = d_min - shrink;
            let fhi = secular_fn(&poles, m, hi);
            let flo = secular_fn(&poles, m, lower);
            if !(flo.is_finite() && fhi.is_finite()) || flo >= 0.0 {
                return Err(Error::Bracket { lower, upper: d_min });
            }
            if fhi > 0.0 {
                break bisect(&poles, m, lower, hi);
            }
            if shrink <= floor {
                break hi;
            }
            shrink = f64::max(shrink * 1e-2, floor);
        };
        bracketed.push(BracketedRoot {
            root,
            lower,
            upper: d_min,
        });
    }

    let mut values: Vec<f64> = bracketed.iter().map(|r| r.root).chain(passthrough.iter().copied()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SecularRoots {
        values,
        bracketed,
        passthrough,
    })
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .take(CROSSCHECK_COUNT)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Full spectral report with the default truncation `N/4`.
pub fn nonlocal_spectrum(u: &SteadyState) -> Result<EigenReport> {
    nonlocal_spectrum_with(u, modes_for(u))
}

pub fn nonlocal_spectrum_with(u: &SteadyState, n_modes: usize) -> Result<EigenReport> {
    let l = assemble_linearization(u, n_modes)?;
    let (nonlocal_eigs, vectors) = symmetric_eigen_desc(l)?;
    let local = local_spectrum(u, n_modes)?;
    let (betas, m) = couplings(u, &local)?;
    let secular = secular_roots(&local, &betas, m)?;
    let crosscheck_error = max_deviation(&nonlocal_eigs, &secular.values);

    let mut translation = None;
    let mut instability_theorem_applies = false;
    if u.modality > 0 {
        let ux = gradient(&u.field);
        instability_theorem_applies = sign_changes(&ux) >= 3;
        let t = DVector::from_vec(basis::project(&ux, n_modes));
        let norm = t.norm();
        if norm > 0.0 {
            let (index, overlap) = (0..vectors.ncols())
                .map(|i| (i, (vectors.column(i).dot(&t) / norm).abs()))
                .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if overlap > TRANSLATION_OVERLAP {
                translation = Some(TranslationMode {
                    index,
                    nu: nonlocal_eigs[index],
                    overlap,
                });
            }
        }
    }
    let leading_nu = nonlocal_eigs
        .iter()
        .enumerate()
        .filter(|(i, _)| translation.map_or(true, |t| t.index != *i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(EigenReport {
        local,
        betas,
        m,
        nonlocal_eigs,
        secular,
        crosscheck_error,
        translation,
        leading_nu,
        verdict: Verdict::from_leading(leading_nu),
        instability_theorem_applies,
    })
}

/// Outcome of comparing the direct and secular routes.
#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckReport {
    pub max_deviation: f64,
    pub direct: Vec<f64>,
    pub secular: Vec<f64>,
}

/// Compares the two spectral routes on the leading eigenvalues and fails if
/// they disagree by more than `CROSSCHECK_TOL`.
pub fn spectrum_crosscheck(u: &SteadyState) -> Result<CrosscheckReport> {
    let report = nonlocal_spectrum(u)?;
    let direct: Vec<f64> = report.nonlocal_eigs.iter().copied().take(CROSSCHECK_COUNT).collect();
    let secular: Vec<f64> = report.secular.values.iter().copied().take(CROSSCHECK_COUNT).collect();
    if !(report.crosscheck_error < CROSSCHECK_TOL) {
        return Err(Error::CrosscheckMismatch {
            max_deviation: report.crosscheck_error,
            direct,
            secular,
        });
    }
    Ok(CrosscheckReport {
        max_deviation: report.crosscheck_error,
        direct,
        secular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::ModelParams;
    use crate::grid::Grid;
    use crate::steady::constant_state;
    use core::f64::consts::PI;

    fn constant(d: f64, kappa: f64) -> SteadyState {
        constant_state(&Grid::new(64).unwrap(), &ModelParams::new(d, kappa).unwrap())
    }

    #[test]
    fn linearization_at_constant() {
        let u = constant(0.01, 1.5);
        let l = assemble_linearization(&u, 16).unwrap();
        for i in 0..33 {
            for j in 0..33 {
                let expected = match (i, j) {
                    (0, 0) => -1.0,
                    _ if i == j => 0.5 - 0.01 * basis::eigenvalue(i),
                    _ => 0.0,
                };
                assert!((l[(i, j)] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_state_verdicts() {
        let r = nonlocal_spectrum(&constant(0.01, 1.2)).unwrap();
        assert!((r.leading_nu - (0.2 - 4.0 * PI * PI * 0.01)).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Stable);
        let d = 0.01;
        let r = nonlocal_spectrum(&constant(d, 1.0 + 4.0 * PI * PI * d)).unwrap();
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(r.translation.is_none());
    }

    #[test]
    fn local_spectrum_at_constant() {
        let u = constant(0.01, 1.5);
        let s = local_spectrum(&u, 16).unwrap();
        assert!((s.lambdas[0] - 0.5).abs() < 1e-13);
        for j in 1..=16 {
            let expected = 0.5 - 0.01 * 4.0 * PI * PI * (j * j) as f64;
            assert!((s.lambdas[2 * j - 1] - expected).abs() < 1e-12);
            assert!((s.lambdas[2 * j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_state_secular_structure() {
        let u = constant(0.01, 1.5);
        let local = local_spectrum(&u, 16).unwrap();
        let (betas, m) = couplings(&u, &local).unwrap();
        let roots = secular_roots(&local, &betas, m).unwrap();
        assert_eq!(roots.bracketed.len(), 1);
        assert!((roots.bracketed[0].root + 1.0).abs() < 1e-10);
        assert_eq!(roots.passthrough.len(), 32);
        let check = spectrum_crosscheck(&u).unwrap();
        assert!(check.max_deviation < 1e-10);
    }

    #[test]
    fn one_term_secular() {
        let g = Grid::new(16).unwrap();
        let local = LocalSpectrum {
            lambdas: alloc::vec![0.3],
            eigenfunctions: alloc::vec![Field::constant(&g, 1.0)],
            zero_counts: alloc::vec![0],
        };
        let roots = secular_roots(&local, &[1.7], 0.4).unwrap();
        assert!((roots.values[0] - (0.3 - 0.4 * 1.7 * 1.7)).abs() < 1e-12);
    }

    #[test]
    fn merged_cluster_passes_one_copy_through() {
        let g = Grid::new(16).unwrap();
        let f = Field::constant(&g, 1.0);
        let local = LocalSpectrum {
            lambdas: alloc::vec![1.0, 0.5, 0.5, -2.0],
            eigenfunctions: alloc::vec![f.clone(); 4],
            zero_counts: alloc::vec![0, 2, 2, 4],
        };
        let roots = secular_roots(&local, &[1.0, 0.6, 0.8, 0.5], 1.0).unwrap();
        assert_eq!(roots.values.len(), 4);
        assert_eq!(roots.passthrough, alloc::vec![0.5]);
        for r in &roots.bracketed {
            assert!(r.lower < r.root && r.root < r.upper);
        }
        // the same problem as a dense matrix: diag(λ) - M β βᵀ
        let lam = DVector::from_vec(alloc::vec![1.0, 0.5, 0.5, -2.0]);
        let beta = DVector::from_vec(alloc::vec![1.0, 0.6, 0.8, 0.5]);
        let mat = DMatrix::from_diagonal(&lam) - &beta * beta.transpose();
        let (direct, _) = symmetric_eigen_desc(mat).unwrap();
        for (a, b) in direct.iter().zip(&roots.values) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn sign_change_counts() {
        let g = Grid::new(64).unwrap();
        let f = Field::from_fn(&g, |x| libm::cos(6.0 * PI * x)).unwrap();
        assert_eq!(sign_changes(&f), 6);
        assert_eq!(sign_changes(&Field::constant(&g, 1.0)), 0);
    }
}
