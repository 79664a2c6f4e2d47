//! Two-qubit polarisation tomography: the 36-setting projector set,
//! forward count prediction, maximum-likelihood reconstruction, fidelity
//! and concurrence metrics, and Monte-Carlo uncertainty propagation.

use nalgebra::{DMatrix, DVector, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

type C = Complex64;
type M4 = Matrix4<Complex64>;

/// Physical 4×4 density matrix in the {HH, HV, VH, VV} basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: M4,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(matrix: M4) -> Result<Self> {
        let herm = (matrix - matrix.adjoint())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::Validation(format!(
                "density matrix not Hermitian (deviation {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::Validation(format!(
                "density matrix trace {trace} is not 1"
            )));
        }
        let eigen = matrix.symmetric_eigenvalues();
        if eigen.iter().any(|&l| l < -1e-10) {
            return Err(Error::Validation(format!(
                "negative eigenvalue {:.3e}",
                eigen.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &M4 {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }
}

/// Single-qubit analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Setting {
    H,
    V,
    D,
    A,
    R,
    L,
}

pub const SETTINGS: [Setting; 6] = [
    Setting::H,
    Setting::V,
    Setting::D,
    Setting::A,
    Setting::R,
    Setting::L,
];

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::H => "H",
            Setting::V => "V",
            Setting::D => "D",
            Setting::A => "A",
            Setting::R => "R",
            Setting::L => "L",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(Setting::H),
            "V" => Ok(Setting::V),
            "D" => Ok(Setting::D),
            "A" => Ok(Setting::A),
            "R" => Ok(Setting::R),
            "L" => Ok(Setting::L),
            other => Err(Error::Validation(format!("unknown setting {other:?}"))),
        }
    }

    /// Pauli basis the setting belongs to: 0 for {H,V}, 1 for {D,A},
    /// 2 for {R,L}.
    pub fn basis(self) -> usize {
        match self {
            Setting::H | Setting::V => 0,
            Setting::D | Setting::A => 1,
            Setting::R | Setting::L => 2,
        }
    }

    /// Analyzer state; R = (|H⟩ + i|V⟩)/√2, L its conjugate.
    pub fn state(self) -> Vector2<C> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Setting::H => Vector2::new(C::new(1.0, 0.0), C::ZERO),
            Setting::V => Vector2::new(C::ZERO, C::new(1.0, 0.0)),
            Setting::D => Vector2::new(C::new(s, 0.0), C::new(s, 0.0)),
            Setting::A => Vector2::new(C::new(s, 0.0), C::new(-s, 0.0)),
            Setting::R => Vector2::new(C::new(s, 0.0), C::new(0.0, s)),
            Setting::L => Vector2::new(C::new(s, 0.0), C::new(0.0, -s)),
        }
    }
}

/// Rank-1 projector |ab⟩⟨ab| for a setting pair.
pub fn projector(a: Setting, b: Setting) -> M4 {
    let sa = a.state();
    let sb = b.state();
    let ket = Vector4::new(
        sa[0] * sb[0],
        sa[0] * sb[1],
        sa[1] * sb[0],
        sa[1] * sb[1],
    );
    ket * ket.adjoint()
}

/// The canonical 36-setting order: (H..L) × (H..L).
pub fn standard_settings() -> Vec<(Setting, Setting)> {
    let mut out = Vec::with_capacity(36);
    for &a in &SETTINGS {
        for &b in &SETTINGS {
            out.push((a, b));
        }
    }
    out
}

/// Measured (or simulated) counts for a set of projection settings.
#[derive(Debug, Clone)]
pub struct ProjectionSet {
    pub settings: Vec<(Setting, Setting)>,
    pub counts: Vec<f64>,
}

impl ProjectionSet {
    pub fn validate(&self) -> Result<()> {
        if self.settings.len() != 36 || self.counts.len() != 36 {
            return Err(Error::Validation(format!(
                "expected 36 settings with counts, got {} and {}",
                self.settings.len(),
                self.counts.len()
            )));
        }
        for (i, s) in self.settings.iter().enumerate() {
            if self.settings[i + 1..].contains(s) {
                return Err(Error::Validation(format!(
                    "duplicate setting ({}, {})",
                    s.0.as_str(),
                    s.1.as_str()
                )));
            }
        }
        if self.counts.iter().any(|&n| n < 0.0 || !n.is_finite()) {
            return Err(Error::Validation("counts must be finite and non-negative".into()));
        }
        if self.counts.iter().all(|&n| n == 0.0) {
            return Err(Error::Validation("all counts are zero".into()));
        }
        Ok(())
    }

    /// Two-qubit basis index (0..9) per setting.
    fn basis_index(&self) -> Vec<usize> {
        self.settings
            .iter()
            .map(|&(a, b)| a.basis() * 3 + b.basis())
            .collect()
    }
}

/// Expected counts n_ab = N · Tr(ρ Π_ab) per setting.
pub fn predicted_counts(
    rho: &DensityMatrix,
    settings: &[(Setting, Setting)],
    n_total_per_basis: f64,
) -> Vec<f64> {
    settings
        .iter()
        .map(|&(a, b)| n_total_per_basis * (rho.matrix() * projector(a, b)).trace().re)
        .collect()
}

fn rho_from_params(t: &[f64; 16]) -> M4 {
    // lower-triangular T: real diagonal, complex strict lower part
    let mut m = M4::zeros();
    m[(0, 0)] = C::new(t[0], 0.0);
    m[(1, 1)] = C::new(t[1], 0.0);
    m[(2, 2)] = C::new(t[2], 0.0);
    m[(3, 3)] = C::new(t[3], 0.0);
    m[(1, 0)] = C::new(t[4], t[5]);
    m[(2, 0)] = C::new(t[6], t[7]);
    m[(2, 1)] = C::new(t[8], t[9]);
    m[(3, 0)] = C::new(t[10], t[11]);
    m[(3, 1)] = C::new(t[12], t[13]);
    m[(3, 2)] = C::new(t[14], t[15]);
    let rho = m.adjoint() * m;
    let tr = rho.trace().re;
    rho / C::new(tr.max(1e-300), 0.0)
}

/// Hermitian parameter basis: 4 diagonal projectors, then the real and
/// imaginary pair matrices for each strict-lower element.
fn hermitian_basis() -> Vec<M4> {
    let mut basis = Vec::with_capacity(16);
    for i in 0..4 {
        let mut m = M4::zeros();
        m[(i, i)] = C::new(1.0, 0.0);
        basis.push(m);
    }
    for r in 1..4 {
        for c in 0..r {
            let mut x = M4::zeros();
            x[(r, c)] = C::new(1.0, 0.0);
            x[(c, r)] = C::new(1.0, 0.0);
            basis.push(x);
            let mut y = M4::zeros();
            y[(r, c)] = C::new(0.0, 1.0);
            y[(c, r)] = C::new(0.0, -1.0);
            basis.push(y);
        }
    }
    basis
}

/// Least-squares estimate of ρ from per-basis-normalized count frequencies,
/// projected onto the physical set (eigenvalues clipped, trace renormalized).
fn linear_inversion(projectors: &[M4], counts: &[f64], basis_of: &[usize]) -> M4 {
    let mut totals = [0.0f64; 9];
    for (k, &b) in basis_of.iter().enumerate() {
        totals[b] += counts[k];
    }
    let basis = hermitian_basis();
    let n = projectors.len();
    let mut a = DMatrix::<f64>::zeros(n + 1, 16);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for k in 0..n {
        for (j, bj) in basis.iter().enumerate() {
            a[(k, j)] = (bj * projectors[k]).trace().re;
        }
        let tot = totals[basis_of[k]];
        rhs[k] = if tot > 0.0 { counts[k] / tot } else { 0.25 };
    }
    // trace = 1, weighted to dominate
    for j in 0..4 {
        a[(n, j)] = 10.0;
    }
    rhs[n] = 10.0;
    let theta = a
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::from_element(16, 0.0));

    let mut rho = M4::zeros();
    for (j, bj) in basis.iter().enumerate() {
        rho += bj * C::new(theta[j], 0.0);
    }
    rho = (rho + rho.adjoint()) * C::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(rho);
    let mut out = M4::zeros();
    for i in 0..4 {
        let l = eig.eigenvalues[i].max(1e-8);
        let v = eig.eigenvectors.column(i);
        out += (v * v.adjoint()) * C::new(l, 0.0);
    }
    let tr = out.trace().re;
    out / C::new(tr, 0.0)
}

/// Parameters t with ρ = T†T/Tr for a positive definite ρ, via the
/// reverse-order Cholesky factorization ρ = (JG†J)†(JG†J), J the
/// antidiagonal reversal.
fn params_from_rho(rho: &M4) -> [f64; 16] {
    let mut m = rho + M4::identity() * C::new(1e-8, 0.0);
    let tr = m.trace().re;
    m /= C::new(tr, 0.0);
    let rev = |a: &M4| M4::from_fn(|r, c| a[(3 - r, 3 - c)]);
    let g = nalgebra::linalg::Cholesky::new(rev(&m))
        .map(|ch| ch.l())
        .unwrap_or_else(M4::identity);
    let lower = rev(&g.adjoint());
    let mut t = [0.0f64; 16];
    for i in 0..4 {
        t[i] = lower[(i, i)].re;
    }
    let off = [(1usize, 0usize), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];
    for (j, &(r, c)) in off.iter().enumerate() {
        t[4 + 2 * j] = lower[(r, c)].re;
        t[5 + 2 * j] = lower[(r, c)].im;
    }
    t
}

/// Maximum-likelihood reconstruction result.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Per-basis fitted normalizations, row-major over (basis_a, basis_b).
    pub basis_norms: [f64; 9],
}

struct MleProblem {
    projectors: Vec<M4>,
    counts: Vec<f64>,
    basis: Vec<usize>,
}

impl MleProblem {
    /// Model counts with per-basis normalizations profiled out
    /// analytically: N̂_b = Σ_b n / Σ_b p.
    fn model(&self, t: &[f64; 16]) -> (Vec<f64>, [f64; 9]) {
        let rho = rho_from_params(t);
        let p: Vec<f64> = self
            .projectors
            .iter()
            .map(|pi| (rho * pi).trace().re.max(1e-12))
            .collect();
        let mut num = [0.0f64; 9];
        let mut den = [0.0f64; 9];
        for (k, &b) in self.basis.iter().enumerate() {
            num[b] += self.counts[k];
            den[b] += p[k];
        }
        let mut norms = [0.0f64; 9];
        for b in 0..9 {
            norms[b] = if den[b] > 0.0 { num[b] / den[b] } else { 0.0 };
        }
        let m = p
            .iter()
            .zip(&self.basis)
            .map(|(&pk, &b)| norms[b] * pk)
            .collect();
        (m, norms)
    }

    /// Weighted residuals (m − n)/√max(m, 1).
    fn residuals(&self, t: &[f64; 16]) -> DVector<f64> {
        let (m, _) = self.model(t);
        DVector::from_iterator(
            m.len(),
            m.iter()
                .zip(&self.counts)
                .map(|(&mk, &nk)| (mk - nk) / mk.max(1.0).sqrt()),
        )
    }
}

/// Reconstructs the density matrix maximizing the Poisson likelihood via
/// a positivity-preserving ρ = T†T/Tr(T†T) parametrization and damped
/// Gauss-Newton with backtracking.
pub fn mle_reconstruct(set: &ProjectionSet) -> Result<MleResult> {
    set.validate()?;
    let problem = MleProblem {
        projectors: set.settings.iter().map(|&(a, b)| projector(a, b)).collect(),
        counts: set.counts.clone(),
        basis: set.basis_index(),
    };

    // warm start from projected linear inversion; the Gauss-Newton polish
    // then only has to correct for the Poisson weighting
    let rho0 = linear_inversion(&problem.projectors, &problem.counts, &problem.basis);
    let mut t = params_from_rho(&rho0);
    let mut r = problem.residuals(&t);
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let max_iter = 500;
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;
    let mut converged = false;

    for it in 0..max_iter {
        iterations = it + 1;
        // numeric Jacobian, forward differences
        let n_res = r.len();
        let mut j = DMatrix::<f64>::zeros(n_res, 16);
        let h = 1e-7;
        for a in 0..16 {
            let mut tp = t;
            tp[a] += h;
            let rp = problem.residuals(&tp);
            for k in 0..n_res {
                j[(k, a)] = (rp[k] - r[k]) / h;
            }
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        gradient_norm = g.amax();
        if gradient_norm < 1e-8 {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for a in 0..16 {
                damped[(a, a)] += lambda * (jtj[(a, a)].abs() + 1e-12);
            }
            let step = match damped.lu().solve(&(-&g)) {
                Some(s) => s,
                None => break,
            };
            let mut trial = t;
            for a in 0..16 {
                trial[a] += step[a];
            }
            let r_trial = problem.residuals(&trial);
            let chi2_trial = r_trial.norm_squared();
            if chi2_trial <= chi2 {
                let rel = (chi2 - chi2_trial) / chi2.max(1e-300);
                t = trial;
                r = r_trial;
                chi2 = chi2_trial;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel < 1e-15 && step.amax() < 1e-12 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !accepted {
            if !accepted {
                // stuck at a stationary point the damping cannot leave
                converged = gradient_norm < 1e-6;
            }
            break;
        }
    }

    let (_, basis_norms) = problem.model(&t);
    let mut rho = rho_from_params(&t);
    // symmetrize against roundoff before validation
    rho = (rho + rho.adjoint()) * C::new(0.5, 0.0);
    let tr = rho.trace().re;
    rho /= C::new(tr, 0.0);
    Ok(MleResult {
        rho: DensityMatrix::new(rho)?,
        converged,
        gradient_norm,
        iterations,
        basis_norms,
    })
}

/// Overlap ⟨ψ|ρ|ψ⟩ with a pure target state (normalized internally).
pub fn fidelity(rho: &DensityMatrix, target: &Vector4<C>) -> f64 {
    let psi = target / C::new(target.norm(), 0.0);
    (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re.clamp(0.0, 1.0)
}

/// Hermitian square root via eigendecomposition.
fn matrix_sqrt(m: &M4) -> M4 {
    let eig = nalgebra::linalg::SymmetricEigen::new(*m);
    let mut d = M4::zeros();
    for i in 0..4 {
        d[(i, i)] = C::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Wootters concurrence via the Hermitian √(√ρ ρ̃ √ρ) route.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // σy ⊗ σy has ±1 on the anti-diagonal
    let mut yy = M4::zeros();
    yy[(0, 3)] = C::new(-1.0, 0.0);
    yy[(1, 2)] = C::new(1.0, 0.0);
    yy[(2, 1)] = C::new(1.0, 0.0);
    yy[(3, 0)] = C::new(-1.0, 0.0);
    let rho_tilde = yy * m.conjugate() * yy;
    let sqrt_rho = matrix_sqrt(m);
    let inner = sqrt_rho * rho_tilde * sqrt_rho;
    let inner = (inner + inner.adjoint()) * C::new(0.5, 0.0);
    let mut lambdas: Vec<f64> = inner
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0).min(1.0)
}

/// Statistic recomputed per Monte-Carlo trial.
pub enum Metric {
    Fidelity(Vector4<C>),
    Concurrence,
    Purity,
}

impl Metric {
    fn eval(&self, rho: &DensityMatrix) -> f64 {
        match self {
            Metric::Fidelity(target) => fidelity(rho, target),
            Metric::Concurrence => concurrence(rho),
            Metric::Purity => rho.purity(),
        }
    }
}

/// Poisson-resamples the counts `n_trials` times, re-reconstructs, and
/// returns the sample mean and standard deviation of the metric.
/// Trials whose reconstruction fails are skipped; more than 10% failures
/// is an error.
pub fn monte_carlo_uncertainty(
    set: &ProjectionSet,
    n_trials: usize,
    seed: u64,
    metric: &Metric,
) -> Result<(f64, f64)> {
    set.validate()?;
    if n_trials < 50 {
        return Err(Error::Validation("need at least 50 trials".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_trials);
    let mut failures = 0usize;
    for _ in 0..n_trials {
        let resampled: Vec<f64> = set
            .counts
            .iter()
            .map(|&n| {
                if n <= 0.0 {
                    0.0
                } else {
                    Poisson::new(n).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                }
            })
            .collect();
        let trial = ProjectionSet {
            settings: set.settings.clone(),
            counts: resampled,
        };
        match mle_reconstruct(&trial) {
            Ok(res) => values.push(metric.eval(&res.rho)),
            Err(_) => failures += 1,
        }
    }
    if failures * 10 > n_trials {
        return Err(Error::Reconstruction(format!(
            "{failures} of {n_trials} Monte-Carlo reconstructions failed"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, var.sqrt()))
}

/// |φ⁺⟩ = (|HH⟩ + |VV⟩)/√2.
pub fn phi_plus() -> Vector4<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(C::new(s, 0.0), C::ZERO, C::ZERO, C::new(s, 0.0))
}

/// |ψ⁺⟩ = (|HV⟩ + |VH⟩)/√2.
pub fn psi_plus() -> Vector4<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(C::ZERO, C::new(s, 0.0), C::new(s, 0.0), C::ZERO)
}

/// p|φ⁺⟩⟨φ⁺| + (1−p)·I/4.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Validation(format!("Werner parameter {p} outside [0,1]")));
    }
    let psi = phi_plus();
    let pure = psi * psi.adjoint();
    let rho = pure * C::new(p, 0.0) + M4::identity() * C::new((1.0 - p) / 4.0, 0.0);
    DensityMatrix::new(rho)
}
