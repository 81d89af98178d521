//! Weight functions, adaptive quadrature and the Abel-summation identity.
//!
//! With `w(t) = √(ln t / t)` and `h(t) = √(t / ln t) = 1 / w(t)`, the weight
//! sum can be written `S(x) = Σ_{p≤x} h(p) · ln p / p`, and Abel summation
//! against the step function `M` gives
//!
//! ```text
//! S(x) = h(x) M(x) − ∫₂ˣ M(t) h′(t) dt.
//! ```
//!
//! Because `M` is constant between primes the integral telescopes into
//! `Σ M(p_k) (h(t_{k+1}) − h(t_k))` over the partition `{primes ≤ x} ∪ {x}`,
//! so the identity can be checked with no quadrature error at all.
//!
//! The smooth main term `h(x) ln x − ∫₂ˣ ln t · h′(t) dt = h(2) ln 2 + ∫₂ˣ dt / √(t ln t)`
//! is checked by evaluating both integrals with adaptive Simpson quadrature.

use crate::accumulate::SumState;
use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};
use crate::pipeline::{Observer, PointKind, TaggedCheckpoint};
use crate::scalar::Real;
use crate::verify::{Location, VerificationRecord};

pub const ABEL_TOLERANCE: f64 = 1e-8;
pub const MAX_QUADRATURE_DEPTH: u32 = 50;
/// Above this `x` the main-term integrals are taken in `u = √(ln t)`.
pub const SUBSTITUTION_THRESHOLD: f64 = 1e8;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;
/// Points where the closed-form derivatives are compared with differences.
pub const DERIVATIVE_SAMPLES: [f64; 4] = [3.0, 10.0, 1e3, 1e6];

fn log_arg<T: Real>(t: T) -> Result<T> {
    if !(t > T::one()) || !t.is_finite() {
        return Err(Error::Domain(format!("weight functions need t > 1, got {t}")));
    }
    Ok(t.ln())
}

pub fn eval_w<T: Real>(t: T) -> Result<T> {
    let l = log_arg(t)?;
    Ok((l / t).sqrt())
}

/// `w′(t) = (1 − ln t) / (2 t^{3/2} √(ln t))`
pub fn eval_w_prime<T: Real>(t: T) -> Result<T> {
    let l = log_arg(t)?;
    Ok((T::one() - l) / (T::lit(2.0) * t * t.sqrt() * l.sqrt()))
}

pub fn eval_h<T: Real>(t: T) -> Result<T> {
    let l = log_arg(t)?;
    Ok((t / l).sqrt())
}

/// `h′(t) = (ln t − 1) / (2 √t (ln t)^{3/2})`
pub fn eval_h_prime<T: Real>(t: T) -> Result<T> {
    let l = log_arg(t)?;
    Ok((l - T::one()) / (T::lit(2.0) * t.sqrt() * l * l.sqrt()))
}

struct Panel<T> {
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    eps: T,
    depth: u32,
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The error target is `tol · (1 + |I|)`, with `|I|` estimated from an
/// initial 8-panel pass and shared between sub-intervals in proportion to
/// their width. Panels are processed in a fixed order, so results are
/// reproducible bit for bit.
pub fn quadrature<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::Config(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Domain(format!("quadrature needs finite a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(T::zero());
    }
    let eval = |t: T| -> Result<T> {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("integrand is not finite at t = {t}")))
        }
    };

    const START_PANELS: usize = 8;
    let half = T::lit(0.5);
    let width = b - a;
    let mut panels = Vec::with_capacity(START_PANELS);
    let mut estimate = T::zero();
    for i in 0..START_PANELS {
        let lo = a + width * T::from_count(i as u64) / T::from_count(START_PANELS as u64);
        let hi = if i + 1 == START_PANELS {
            b
        } else {
            a + width * T::from_count(i as u64 + 1) / T::from_count(START_PANELS as u64)
        };
        let (fa, fm, fb) = (eval(lo)?, eval(half * (lo + hi))?, eval(hi)?);
        let whole = simpson(lo, hi, fa, fm, fb);
        estimate = estimate + whole;
        panels.push(Panel { a: lo, b: hi, fa, fm, fb, whole, eps: T::zero(), depth: 0 });
    }
    let budget = tol * (T::one() + estimate.abs());
    for p in panels.iter_mut() {
        p.eps = budget * (p.b - p.a) / width;
    }
    panels.reverse();

    let mut total = CompensatedSum::new();
    let fifteen = T::lit(15.0);
    while let Some(p) = panels.pop() {
        let m = half * (p.a + p.b);
        let lm = half * (p.a + m);
        let rm = half * (m + p.b);
        let (flm, frm) = (eval(lm)?, eval(rm)?);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= fifteen * p.eps {
            total.add(left + right + delta / fifteen);
            continue;
        }
        if p.depth >= MAX_QUADRATURE_DEPTH {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{}, {}] after {} bisections (error estimate {}, target {})",
                p.a,
                p.b,
                p.depth,
                delta.abs() / fifteen,
                p.eps
            )));
        }
        let eps = p.eps * half;
        let depth = p.depth + 1;
        // Right pushed first so the left half is refined first.
        panels.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, eps, depth });
        panels.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, eps, depth });
    }
    Ok(total.value())
}

/// `(∫₂ˣ ln t · h′(t) dt, ∫₂ˣ dt / √(t ln t))`.
pub fn main_term_integrals<T: Real>(x: T, tol: T) -> Result<(T, T)> {
    let two = T::lit(2.0);
    if !(x >= two) {
        return Err(Error::Domain(format!("main-term integrals need x >= 2, got {x}")));
    }
    if x > T::lit(SUBSTITUTION_THRESHOLD) {
        // t = exp(u²): ln t · h′(t) dt = (u² − 1) e^{u²/2} du, dt/√(t ln t) = 2 e^{u²/2} du.
        let (ua, ub) = (two.ln().sqrt(), x.ln().sqrt());
        let half = T::lit(0.5);
        let with_log = quadrature(|u: T| (u * u - T::one()) * (half * u * u).exp(), ua, ub, tol)?;
        let plain = quadrature(|u: T| two * (half * u * u).exp(), ua, ub, tol)?;
        return Ok((with_log, plain));
    }
    let with_log = quadrature(
        |t: T| {
            let l = t.ln();
            (l - T::one()) / (two * t.sqrt() * l.sqrt())
        },
        two,
        x,
        tol,
    )?;
    let plain = quadrature(|t: T| T::one() / (t * t.ln()).sqrt(), two, x, tol)?;
    Ok((with_log, plain))
}

fn relative_gap(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

/// Binary64 checks of `w′` and `h′`:
///
/// * `w_prime_fd`, `h_prime_fd`: closed form against a central difference
///   with step `10⁻⁵ t`, relative gap at most `tolerance`, at each sample;
/// * `stationary_at_e`: both derivatives vanish at `t = e`;
/// * `derivative_signs`: `w′ < 0 < h′` above `e` and `h′ < 0 < w′` below it,
///   on `grid_points` log-spaced points of `[1.1, 10⁸]` (the residual is the
///   number of violations).
pub fn check_derivatives(tolerance: f64, grid_points: usize) -> Result<Vec<VerificationRecord>> {
    use crate::verify::Relation;
    let mut out = Vec::new();
    for t in DERIVATIVE_SAMPLES {
        let d = t * 1e-5;
        let fd_w = (eval_w(t + d)? - eval_w(t - d)?) / (2.0 * d);
        let fd_h = (eval_h(t + d)? - eval_h(t - d)?) / (2.0 * d);
        let (wp, hp) = (eval_w_prime(t)?, eval_h_prime(t)?);
        let at = Location::Arg(t);
        out.push(VerificationRecord::with_residual("w_prime_fd", at, Relation::Equal, wp, fd_w, relative_gap(wp, fd_w), tolerance));
        out.push(VerificationRecord::with_residual("h_prime_fd", at, Relation::Equal, hp, fd_h, relative_gap(hp, fd_h), tolerance));
    }
    let e = std::f64::consts::E;
    let (wp, hp) = (eval_w_prime(e)?, eval_h_prime(e)?);
    let worst = wp.abs().max(hp.abs());
    out.push(VerificationRecord::with_residual("stationary_at_e", Location::Arg(e), Relation::Equal, worst, 0.0, worst, f64::EPSILON));

    let (lo, hi) = (1.1f64.ln(), 1e8f64.ln());
    let steps = grid_points.max(2) - 1;
    let mut violations = 0u32;
    let mut first = Location::Whole;
    for k in 0..=steps {
        let t = (lo + (hi - lo) * k as f64 / steps as f64).exp();
        let (wp, hp) = (eval_w_prime(t)?, eval_h_prime(t)?);
        let ok = if t > e { wp < 0.0 && hp > 0.0 } else { wp > 0.0 && hp < 0.0 };
        if !ok {
            violations += 1;
            if violations == 1 {
                first = Location::Arg(t);
            }
        }
    }
    let v = f64::from(violations);
    out.push(VerificationRecord::with_residual("derivative_signs", first, Relation::Equal, v, 0.0, v, 0.0));
    Ok(out)
}

/// Integration-by-parts identity for the smooth main term, both sides by
/// quadrature at `tol`; passes when the relative gap is at most `10 · tol`.
pub fn main_term_identity<T: Real>(x: T, tol: T) -> Result<VerificationRecord> {
    if !(tol >= T::lit(1e-12)) {
        return Err(Error::Config(format!("main-term tolerance must be at least 1e-12, got {tol}")));
    }
    let two = T::lit(2.0);
    let (with_log, plain) = main_term_integrals(x, tol)?;
    let lhs = eval_h(x)? * x.ln() - with_log;
    let rhs = eval_h(two)? * two.ln() + plain;
    Ok(VerificationRecord::equality(
        "main_term",
        Location::At(x.to_f64_lossy()),
        lhs.to_f64_lossy(),
        rhs.to_f64_lossy(),
        10.0 * tol.to_f64_lossy(),
    ))
}

/// `(∫₂ˣ dt / √(t ln t)) / √(x / ln x)`.
pub fn main_term_growth<T: Real>(x: T) -> Result<T> {
    let (_, plain) = main_term_integrals(x, T::lit(1e-10))?;
    Ok(plain / eval_h(x)?)
}

/// The three members of the Abel identity at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbelDecomposition<T> {
    pub x: T,
    pub direct_s: T,
    /// `h(x) M(x)`
    pub boundary_term: T,
    /// `∫₂ˣ M(t) h′(t) dt`, telescoped.
    pub integral_term: T,
    /// `|direct_s − (boundary_term − integral_term)| / direct_s`
    pub residual: T,
}

impl<T: Real> AbelDecomposition<T> {
    pub fn record(&self, tolerance: f64) -> VerificationRecord {
        let r = self.residual.to_f64_lossy();
        VerificationRecord::with_residual(
            "abel",
            Location::At(self.x.to_f64_lossy()),
            crate::verify::Relation::Equal,
            self.direct_s.to_f64_lossy(),
            (self.boundary_term - self.integral_term).to_f64_lossy(),
            r,
            tolerance,
        )
    }
}

/// Streams the telescoped Abel integral alongside the sums.
///
/// After prime `p_{k+1}` arrives the piece `M(p_k) (h(p_{k+1}) − h(p_k))` is
/// added; at a checkpoint `x` the open piece `M(p_n) (h(x) − h(p_n))` closes
/// the partition.
#[derive(Debug, Clone, Default)]
pub struct AbelTracker<T> {
    integral: CompensatedSum<T>,
    h_last: Option<T>,
    decompositions: Vec<AbelDecomposition<T>>,
}

impl<T: Real> AbelTracker<T> {
    pub fn new() -> Self {
        Self { integral: CompensatedSum::new(), h_last: None, decompositions: Vec::new() }
    }

    pub fn observe(&mut self, prime: u64, before: &SumState<T>) -> Result<()> {
        let h = eval_h(T::from_count(prime))?;
        if let Some(h_last) = self.h_last {
            self.integral.add(before.m() * (h - h_last));
        }
        self.h_last = Some(h);
        Ok(())
    }

    pub fn decomposition_at(&self, x: T, state: &SumState<T>) -> Result<AbelDecomposition<T>> {
        if !(x >= T::lit(2.0)) {
            return Err(Error::Domain(format!("Abel decomposition needs x >= 2, got {x}")));
        }
        let h_last = self
            .h_last
            .ok_or_else(|| Error::Sequencing("Abel decomposition before any prime".into()))?;
        let m = state.m();
        let h_x = eval_h(x)?;
        let integral_term = self.integral.value() + m * (h_x - h_last);
        let boundary_term = h_x * m;
        let direct_s = state.s();
        let residual = (direct_s - (boundary_term - integral_term)).abs() / direct_s;
        Ok(AbelDecomposition { x, direct_s, boundary_term, integral_term, residual })
    }

    /// Decompositions recorded at grid checkpoints, in order.
    pub fn decompositions(&self) -> &[AbelDecomposition<T>] {
        &self.decompositions
    }
}

impl<T: Real> Observer<T> for AbelTracker<T> {
    fn on_term(&mut self, term: &crate::accumulate::WeightedPrimeTerm<T>, before: &SumState<T>, _after: &SumState<T>, _jump: T) {
        // term.prime ≥ 2 was checked when the term was built.
        self.observe(term.prime, before).expect("prime >= 2");
    }

    fn on_checkpoint(&mut self, point: &TaggedCheckpoint<T>, state: &SumState<T>) {
        if point.kind == PointKind::Grid {
            if let Ok(d) = self.decomposition_at(point.checkpoint.x, state) {
                self.decompositions.push(d);
            }
        }
    }
}

/// Abel decomposition at `x` over an ascending prime stream (primes above `x`
/// are ignored).
pub fn abel_decompose<T: Real, I: IntoIterator<Item = u64>>(x: T, primes: I) -> Result<AbelDecomposition<T>> {
    if !(x >= T::lit(2.0)) {
        return Err(Error::Domain(format!("Abel decomposition needs x >= 2, got {x}")));
    }
    let limit = x.floor().to_u64().unwrap_or(u64::MAX);
    let mut state = SumState::new();
    let mut tracker = AbelTracker::new();
    for p in primes.into_iter().take_while(|&p| p <= limit) {
        let before = state;
        state.absorb(p)?;
        tracker.observe(p, &before)?;
    }
    tracker.decomposition_at(x, &state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{primes, SieveConfig};
    use std::f64::consts::E;

    const W_AT_E: f64 = 0.606_530_659_712_633_423_603_799_534_991_180_453_441_918;
    const INT_2_10: f64 = 2.863_026_431_295_600_359_688_126_884_765_904_828_460_13;

    fn ulps(a: f64, b: f64) -> f64 {
        (a - b).abs() / (f64::EPSILON * b.abs())
    }

    #[test]
    fn closed_forms_at_e() {
        assert!((eval_w(E).unwrap() - W_AT_E).abs() < 1e-15);
        assert_eq!(eval_h_prime(E).unwrap(), 0.0);
        assert_eq!(eval_w_prime(E).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        for t in [1.0, 0.5, -2.0, f64::NAN] {
            assert!(eval_w(t).is_err());
            assert!(eval_w_prime(t).is_err());
            assert!(eval_h(t).is_err());
            assert!(eval_h_prime(t).is_err());
        }
    }

    #[test]
    fn reciprocal_within_four_ulps() {
        for t in [3.0, 10.0, 1e6] {
            assert!(ulps(eval_w(t).unwrap() * eval_h(t).unwrap(), 1.0) <= 4.0);
        }
        for k in 1..=400 {
            let t = (k as f64 * 0.05).exp();
            let product = eval_w(t).unwrap() * eval_h(t).unwrap();
            assert!(ulps(product, 1.0) <= 4.0, "t = {t}");
            let w = eval_w(t).unwrap();
            assert!(ulps(w * w, t.ln() / t) <= 4.0, "t = {t}");
        }
    }

    #[test]
    fn derivative_signs() {
        for k in 1..=200 {
            let t = 1.0 + (k as f64 * 0.07).exp_m1();
            let (wp, hp) = (eval_w_prime(t).unwrap(), eval_h_prime(t).unwrap());
            if t > E {
                assert!(wp < 0.0 && hp > 0.0, "t = {t}");
            } else if t < E {
                assert!(wp > 0.0 && hp < 0.0, "t = {t}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        for t in [3.0f64, 10.0, 1e3, 1e6] {
            let d = t * 1e-5;
            let fd_w = (eval_w(t + d).unwrap() - eval_w(t - d).unwrap()) / (2.0 * d);
            let fd_h = (eval_h(t + d).unwrap() - eval_h(t - d).unwrap()) / (2.0 * d);
            let (wp, hp) = (eval_w_prime(t).unwrap(), eval_h_prime(t).unwrap());
            assert!((fd_w - wp).abs() / wp.abs() < 1e-6, "w' at {t}");
            assert!((fd_h - hp).abs() / hp.abs() < 1e-6, "h' at {t}");
        }
    }

    #[test]
    fn derivative_records_pass() {
        let records = check_derivatives(DERIVATIVE_TOLERANCE, 100).unwrap();
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.pass), "{records:?}");
        // A tolerance no central difference can meet flags the comparisons.
        let strict = check_derivatives(1e-300, 100).unwrap();
        assert_eq!(strict.iter().filter(|r| !r.pass).count(), 8);
    }

    #[test]
    fn quadrature_basics() {
        assert!((quadrature(|t: f64| t, 0.0, 1.0, 1e-12).unwrap() - 0.5).abs() < 1e-15);
        assert!((quadrature(|t: f64| 1.0 / t, 1.0, E, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let v = quadrature(|t: f64| 1.0 / (t * t.ln()).sqrt(), 2.0, 10.0, 1e-12).unwrap();
        assert!((v - INT_2_10).abs() / INT_2_10 < 1e-11, "{v}");
        assert_eq!(quadrature(|t: f64| t, 3.0, 3.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_errors() {
        assert!(quadrature(|t: f64| t, 1.0, 0.0, 1e-9).is_err());
        assert!(quadrature(|t: f64| t, 0.0, 1.0, 0.0).is_err());
        let err = quadrature(|t: f64| 1.0 / t, 0.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        // Integrable singularity at 0 the sampler never touches, but refinement cannot settle.
        let err = quadrature(|t: f64| if t == 0.0 { 0.0 } else { 1.0 / t.abs().sqrt() }, 0.0, 1.0, 1e-14);
        assert!(matches!(err, Err(Error::Numeric(_))), "{err:?}");
    }

    #[test]
    fn quadrature_is_deterministic() {
        let f = |t: f64| (t.sin() * t).exp();
        let a = quadrature(f, 0.0, 7.0, 1e-10).unwrap();
        let b = quadrature(f, 0.0, 7.0, 1e-10).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn abel_small_x() {
        let d = abel_decompose(2.0, [2u64, 3, 5]).unwrap();
        assert_eq!(d.integral_term, 0.0);
        assert!(d.residual <= 1e-12);
        let d = abel_decompose(10.0, [2u64, 3, 5, 7, 11]).unwrap();
        assert!(d.residual <= 1e-10, "{d:?}");
        assert!(abel_decompose(1.5, [2u64]).is_err());
    }

    #[test]
    fn abel_by_hand_at_ten() {
        // Σ M(p_k)(h(t_{k+1}) − h(t_k)) over the partition 2, 3, 5, 7, 10.
        let h = |t: f64| eval_h(t).unwrap();
        let w2 = |p: f64| p.ln() / p;
        let m1 = w2(2.0);
        let m2 = m1 + w2(3.0);
        let m3 = m2 + w2(5.0);
        let m4 = m3 + w2(7.0);
        let integral = m1 * (h(3.0) - h(2.0)) + m2 * (h(5.0) - h(3.0)) + m3 * (h(7.0) - h(5.0)) + m4 * (h(10.0) - h(7.0));
        let d = abel_decompose(10.0, [2u64, 3, 5, 7]).unwrap();
        assert!((d.integral_term - integral).abs() < 1e-14);
        assert!((d.boundary_term - h(10.0) * m4).abs() < 1e-14);
    }

    #[test]
    fn abel_at_one_million() {
        let d = abel_decompose(1e6, primes(SieveConfig::new(1_000_000).unwrap())).unwrap();
        assert!(d.residual <= ABEL_TOLERANCE, "{d:?}");
        assert!(d.record(ABEL_TOLERANCE).pass);
    }

    #[test]
    fn main_term_examples() {
        let r = main_term_identity(2.0, 1e-9).unwrap();
        assert_eq!(r.residual, 0.0);
        for x in [1e3, 1e6] {
            let r = main_term_identity(x, 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(main_term_identity(1e3, 1e-13).is_err());
        assert!(main_term_identity(1.0, 1e-9).is_err());
    }

    #[test]
    fn main_term_through_substitution() {
        let r = main_term_identity(1e10, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        // Both parametrisations agree just above and below the switch.
        let (a1, b1) = main_term_integrals(1e8f64, 1e-11).unwrap();
        let (a2, b2) = main_term_integrals(1e8 * (1.0 + 1e-15), 1e-11).unwrap();
        assert!((a1 - a2).abs() / a1 < 1e-9 && (b1 - b2).abs() / b1 < 1e-9);
    }

    #[test]
    fn growth_ratio() {
        let g3 = main_term_growth(1e3).unwrap();
        let g6 = main_term_growth(1e6).unwrap();
        assert!(g3 > 0.0 && g6 > 0.0);
        assert!(main_term_growth(2.0 + 1e-9).unwrap() < 1e-3);
        assert_eq!(main_term_growth(2.0).unwrap(), 0.0);
    }

    #[test]
    fn single_precision_weights() {
        let p: f32 = eval_w(10.0f32).unwrap() * eval_h(10.0f32).unwrap();
        assert!((p - 1.0).abs() <= 4.0 * f32::EPSILON);
        assert!(eval_w_prime(3.0f32).unwrap() < 0.0);
    }
}
