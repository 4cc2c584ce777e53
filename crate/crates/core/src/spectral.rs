//! Spectral gaps, mixing times, Doeblin rates, and the concentration bounds
//! built on them.

use serde::{Deserialize, Serialize};

use crate::chains::{ContinuousKernelSpec, FiniteKernel};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius_gelfand, symmetric_eigenvalues, Matrix};
use crate::num::{cnt, lit, to_f64, Real};

/// Default largest power scanned by [`pseudo_gap_finite`].
pub const DEFAULT_K_MAX: usize = 50;
/// Mixing times above this are reported as errors.
pub const MIXING_CAP: u64 = 1_000_000;

/// Time reversal with respect to `pi`.
pub fn adjoint_finite<T: Real>(kernel: &FiniteKernel<T>, pi: &[T]) -> Result<FiniteKernel<T>> {
    kernel.adjoint(pi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteGap<T> {
    pub gap: T,
    /// `1 - gap`: spectral radius of `P - Π` on `L²(π)`.
    pub radius: T,
    pub reversible: bool,
    /// Set for periodic kernels, whose gap is reported as 0.
    pub periodic: bool,
}

fn reversibility_tol<T: Real>(k: usize) -> T {
    T::stochastic_tol(k) * lit::<T>(100.0)
}

/// `D^{1/2} M D^{-1/2}` with `D = diag(pi)`.
fn similarity_transform<T: Real>(m: &Matrix<T>, pi: &[T]) -> Matrix<T> {
    let k = m.dim();
    let s: Vec<T> = pi.iter().map(|p| p.sqrt()).collect();
    let mut out = Matrix::zeros(k);
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = s[i] * m[(i, j)] / s[j];
        }
    }
    out
}

fn symmetrize<T: Real>(m: &mut Matrix<T>) {
    let k = m.dim();
    let half = lit::<T>(0.5);
    for i in 0..k {
        for j in 0..i {
            let v = half * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn max_abs_eigenvalue<T: Real>(m: &Matrix<T>) -> T {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(T::zero(), |a, l| a.max(l.abs()))
}

/// `γ* = 1 - ρ(P - Π)`. Reversible kernels use the symmetrized
/// eigenproblem; others the spectral radius of `P - Π`.
pub fn absolute_gap_finite<T: Real>(kernel: &FiniteKernel<T>) -> Result<AbsoluteGap<T>> {
    let pi = kernel.invariant_law()?;
    let k = kernel.len();
    let reversible = kernel.is_reversible(&pi, reversibility_tol(k));
    if !kernel.is_aperiodic() {
        return Ok(AbsoluteGap {
            gap: T::zero(),
            radius: T::one(),
            reversible,
            periodic: true,
        });
    }
    let radius = if reversible {
        let mut s = similarity_transform(kernel.transition(), &pi);
        symmetrize(&mut s);
        for i in 0..k {
            for j in 0..k {
                s[(i, j)] -= (pi[i] * pi[j]).sqrt();
            }
        }
        max_abs_eigenvalue(&s)
    } else {
        let pm = kernel.transition().sub(&Matrix::repeated_row(&pi));
        spectral_radius_gelfand(&pm, 60)
    };
    let radius = radius.min(T::one()).max(T::zero());
    Ok(AbsoluteGap {
        gap: T::one() - radius,
        radius,
        reversible,
        periodic: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoGap<T> {
    pub gamma: T,
    /// Smallest maximizing power.
    pub k: usize,
    pub k_max: usize,
    /// The maximum sits at `k_max`, so a larger scan might increase it.
    pub truncated: bool,
}

/// `max_{k ≤ k_max} (1 - ρ((P*)^k P^k - Π)) / k`.
pub fn pseudo_gap_finite<T: Real>(kernel: &FiniteKernel<T>, k_max: usize) -> Result<PseudoGap<T>> {
    if k_max == 0 {
        return Err(Error::validation("k_max", "must be at least 1"));
    }
    let pi = kernel.invariant_law()?;
    let n = kernel.len();
    let u: Vec<T> = pi.iter().map(|p| p.sqrt()).collect();
    let mut pk = kernel.transition().clone();
    let mut best = PseudoGap {
        gamma: T::neg_infinity(),
        k: 1,
        k_max,
        truncated: false,
    };
    for k in 1..=k_max {
        if k > 1 {
            pk = pk.matmul(kernel.transition());
        }
        let a = similarity_transform(&pk, &pi);
        let mut m = a.transpose().matmul(&a);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= u[i] * u[j];
            }
        }
        symmetrize(&mut m);
        let rho = max_abs_eigenvalue(&m).min(T::one());
        let value = (T::one() - rho) / cnt::<T>(k);
        if value > best.gamma {
            best.gamma = value;
            best.k = k;
        }
    }
    best.gamma = best.gamma.max(T::zero());
    best.truncated = best.k == k_max && k_max > 1;
    Ok(best)
}

/// Worst-case total variation `max_x ½ Σ_y |P^n(x,y) - π(y)|`.
pub fn worst_tv<T: Real>(pn: &Matrix<T>, pi: &[T]) -> T {
    let half = lit::<T>(0.5);
    (0..pn.dim())
        .map(|i| {
            half * pn
                .row(i)
                .iter()
                .zip(pi)
                .map(|(&a, &b)| (a - b).abs())
                .sum::<T>()
        })
        .fold(T::zero(), T::max)
}

/// Smallest `n ≥ 1` with worst-case TV distance at most 1/4.
pub fn mixing_time_finite<T: Real>(kernel: &FiniteKernel<T>, pi: &[T]) -> Result<u64> {
    kernel.check_invariant(pi)?;
    let quarter = lit::<T>(0.25);
    let p = kernel.transition();
    let mixed = |n: u64| worst_tv(&p.pow(n), pi) <= quarter;
    if worst_tv(p, pi) <= quarter {
        return Ok(1);
    }
    // exponential search over powers of two by repeated squaring
    let mut lo = 1u64;
    let mut pw = p.clone();
    loop {
        let hi = lo * 2;
        if hi >= MIXING_CAP {
            if !mixed(MIXING_CAP) {
                return Err(Error::MixingCap { cap: MIXING_CAP });
            }
            return Ok(bisect(lo, MIXING_CAP, &mixed));
        }
        pw = pw.matmul(&pw);
        if worst_tv(&pw, pi) <= quarter {
            return Ok(bisect(lo, hi, &mixed));
        }
        lo = hi;
    }
}

/// Smallest `n` in `(lo, hi]` with `mixed(n)`, given `!mixed(lo)` and `mixed(hi)`.
fn bisect(mut lo: u64, mut hi: u64, mixed: &impl Fn(u64) -> bool) -> u64 {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mixed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Uniform-ergodicity constants `(κ, c) = ((1-ε)^{1/m}, 2/(1-ε))`.
pub fn doeblin_to_rate<T: Real>(epsilon: T, m: usize) -> Result<(T, T)> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::validation("epsilon", "must lie in (0,1]"));
    }
    if m == 0 {
        return Err(Error::validation("m", "must be at least 1"));
    }
    let q = T::one() - epsilon;
    let kappa = q.powf(T::one() / cnt::<T>(m));
    let c = if q == T::zero() {
        T::infinity()
    } else {
        lit::<T>(2.0) / q
    };
    Ok((kappa, c))
}

/// Doeblin-based bounds for a continuous kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoeblinBound {
    pub epsilon: f64,
    pub m: usize,
    #[serde(with = "crate::serde_inf")]
    pub kappa: f64,
    #[serde(with = "crate::serde_inf")]
    pub c: f64,
    /// `⌈m log(8c) / log(1/κ)⌉`, at least 1.
    pub tau_bound: u64,
    /// `1 / (2 τ)`.
    pub gamma_ps_lower: f64,
}

pub fn doeblin_bound(epsilon: f64, m: usize) -> Result<DoeblinBound> {
    let (kappa, c) = doeblin_to_rate(epsilon, m)?;
    let tau = if kappa == 0.0 {
        1
    } else {
        let t = (m as f64 * (8.0 * c).ln() / (1.0 / kappa).ln()).ceil();
        if !(t < MIXING_CAP as f64) {
            return Err(Error::MixingCap { cap: MIXING_CAP });
        }
        (t as u64).max(1)
    };
    Ok(DoeblinBound {
        epsilon,
        m,
        kappa,
        c,
        tau_bound: tau,
        gamma_ps_lower: 0.5 / tau as f64,
    })
}

/// Warm-start Bernstein bound for `P(Σ (f(Z_i) - π(f)) ≥ x)`.
#[allow(clippy::too_many_arguments)]
pub fn bernstein_tail<T: Real>(
    gamma_ps: T,
    n: T,
    variance: T,
    sup_dev: T,
    pbar: T,
    density_norm: T,
    x: T,
) -> T {
    let denom = pbar
        * (lit::<T>(8.0) * (n + T::one() / gamma_ps) * variance + lit::<T>(20.0) * sup_dev * x);
    if denom == T::zero() {
        return if x > T::zero() {
            T::zero()
        } else {
            density_norm
        };
    }
    density_norm * (-(gamma_ps * x * x) / denom).exp()
}

/// Bound on `E[1 / (1 + Σ f(Z_i))]` for bounded nonnegative `f` with `π(f) > 0`.
pub fn negmom_bound<T: Real>(
    gamma_ps: T,
    n: T,
    pi_f: T,
    sup_dev: T,
    pbar: T,
    density_norm: T,
) -> Result<T> {
    if !(pi_f > T::zero()) {
        return Err(Error::Undefined(
            "negative-moment bound needs pi(f) > 0".into(),
        ));
    }
    if !(gamma_ps > T::zero()) {
        return Err(Error::validation("gamma_ps", "must be positive"));
    }
    if n < T::one() / gamma_ps {
        return Err(Error::Precondition {
            block: "chain".into(),
            message: format!("n = {n} is below 1/gamma_ps = {}", T::one() / gamma_ps),
        });
    }
    let four = lit::<T>(4.0);
    Ok(four * density_norm * (lit::<T>(20.0) * pbar * sup_dev / gamma_ps + T::one()) / (n * pi_f))
}

/// Gap diagnostics for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub kernel: String,
    /// Exact for finite kernels; absent for continuous ones.
    pub absolute_gap: Option<f64>,
    pub pseudo_gap: Option<f64>,
    pub pseudo_gap_k: Option<usize>,
    pub pseudo_gap_truncated: bool,
    pub mixing_time: Option<u64>,
    /// `1/(2τ)` from the exact mixing time (finite) or the Doeblin bound (continuous).
    pub gamma_ps_lower: Option<f64>,
    /// `1 - λ²`, the reversible lower bound on the pseudo-gap.
    pub reversible_lower: Option<f64>,
    pub doeblin: Option<DoeblinBound>,
    pub reversible: bool,
    pub warnings: Vec<String>,
}

impl SpectralReport {
    /// The best available pseudo-gap: exact if computed, else the Doeblin lower bound.
    pub fn gamma_ps(&self) -> Option<f64> {
        self.pseudo_gap.or(self.gamma_ps_lower)
    }
}

pub fn finite_report(
    name: &str,
    kernel: &FiniteKernel<f64>,
    k_max: usize,
) -> Result<SpectralReport> {
    let abs = absolute_gap_finite(kernel)?;
    let ps = pseudo_gap_finite(kernel, k_max)?;
    let mut warnings = Vec::new();
    if abs.periodic {
        warnings.push(format!(
            "kernel is periodic (period {}); absolute gap reported as 0",
            kernel.period()
        ));
    }
    if ps.truncated {
        warnings.push(format!(
            "pseudo-gap maximizer equals k_max = {k_max}; the scan may be truncated"
        ));
    }
    let (mixing_time, gamma_ps_lower) = if abs.periodic {
        (None, None)
    } else {
        let pi = kernel.invariant_law()?;
        match mixing_time_finite(kernel, &pi) {
            Ok(t) => (Some(t), Some(0.5 / t as f64)),
            Err(Error::MixingCap { cap }) => {
                warnings.push(format!("mixing time exceeds {cap}"));
                (None, None)
            }
            Err(e) => return Err(e),
        }
    };
    Ok(SpectralReport {
        kernel: name.to_string(),
        absolute_gap: Some(abs.gap),
        pseudo_gap: Some(ps.gamma),
        pseudo_gap_k: Some(ps.k),
        pseudo_gap_truncated: ps.truncated,
        mixing_time,
        gamma_ps_lower,
        reversible_lower: abs.reversible.then_some(1.0 - abs.radius * abs.radius),
        doeblin: None,
        reversible: abs.reversible,
        warnings,
    })
}

pub fn continuous_report(name: &str, spec: &ContinuousKernelSpec) -> Result<SpectralReport> {
    spec.validate()?;
    let (eps, m) = spec.doeblin();
    let bound = doeblin_bound(eps, m)?;
    Ok(SpectralReport {
        kernel: name.to_string(),
        absolute_gap: None,
        pseudo_gap: None,
        pseudo_gap_k: None,
        pseudo_gap_truncated: false,
        mixing_time: None,
        gamma_ps_lower: Some(bound.gamma_ps_lower),
        reversible_lower: None,
        doeblin: Some(bound),
        reversible: false,
        warnings: vec!["continuous kernel: pseudo-gap is a Doeblin lower bound".into()],
    })
}

/// Pseudo-gap used in bounds for any kernel: exact for finite kernels, Doeblin lower bound otherwise.
pub fn gamma_ps_of(spec: &crate::chains::KernelSpec) -> Result<f64> {
    match spec {
        crate::chains::KernelSpec::Finite(f) => {
            Ok(to_f64(pseudo_gap_finite(&f.build()?, DEFAULT_K_MAX)?.gamma))
        }
        crate::chains::KernelSpec::Continuous(c) => {
            let (eps, m) = c.doeblin();
            Ok(doeblin_bound(eps, m)?.gamma_ps_lower)
        }
    }
}
