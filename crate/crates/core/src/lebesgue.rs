//! Modular, Luxemburg quasi-norm and Hölder-type pairings for `L^{p(·)}`.

use num_complex::Complex;
use rand::Rng;

use crate::error::{ensure, Result};
use crate::exponent::{dual_exponent, VariableExponent};
use crate::grid::{Grid, GridFunction};
use crate::scalar::Real;

/// Default relative bracket width for the Luxemburg solver.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Iteration cap of the Luxemburg solver.
pub const MAX_ITERATIONS: usize = 200;
/// Constant asserted in the Hölder inequality `∫|fg| ≤ C‖f‖_{p}‖g‖_{p*}`.
pub const HOLDER_CONSTANT: f64 = 2.0;

/// `∫ |f(x)|^{p(x)} dx` on the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modular<S> {
    pub value: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuxemburgNorm<S> {
    pub value: S,
    /// Final bisection interval `[lo, hi]`; `value == hi`.
    pub bracket: (S, S),
    /// `ρ(f / value)`; within `[1 - tol, 1]` up to round-off for nonzero `f`.
    pub modular_at_norm: S,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderPairing<S> {
    pub lhs: S,
    /// `lhs / (‖f‖_{p} ‖g‖_{p*})`, or 0 when either norm vanishes.
    pub ratio: S,
}

/// Modular of nonnegative samples divided by `lambda`.
///
/// `0^p = 0`; at nodes where the exponent is `∞` the contribution is 0 when
/// the scaled value is at most 1 and `+∞` otherwise.
pub fn modular_of_moduli<S: Real>(grid: &Grid<S>, moduli: &[S], p: &VariableExponent<S>, lambda: S) -> S {
    let mut sum = S::zero();
    for (i, (&a, &e)) in moduli.iter().zip(p.values()).enumerate() {
        if a == S::zero() {
            continue;
        }
        let r = a / lambda;
        if p.is_infinite_at(i) {
            if r > S::one() {
                return S::infinity();
            }
            continue;
        }
        sum = sum + r.powf(e);
    }
    sum * grid.cell_volume()
}

fn check_exponent<S: Real>(grid: &Grid<S>, p: &VariableExponent<S>) -> Result<()> {
    ensure!(grid.same_as(p.grid()), Domain, "exponent is sampled on a different grid");
    Ok(())
}

pub fn modular<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>) -> Result<Modular<S>> {
    check_exponent(f.grid(), p)?;
    ensure!(f.samples().iter().all(|z| z.re.is_finite() && z.im.is_finite()), Domain, "non-finite samples");
    Ok(Modular { value: modular_of_moduli(f.grid(), &f.abs(), p, S::one()) })
}

/// Luxemburg quasi-norm of a function given by its moduli.
///
/// The root of `ρ(f/λ) = 1` is bracketed by doubling and then refined by
/// safeguarded false position on `ln ρ` against `ln λ` (exactly linear for a
/// constant exponent), probing just either side of each estimate so the
/// bracket usually closes in a handful of modular evaluations.
pub fn luxemburg_of_moduli<S: Real>(grid: &Grid<S>, moduli: &[S], p: &VariableExponent<S>, tol: S) -> Result<LuxemburgNorm<S>> {
    ensure!(tol > S::zero(), Domain, "tolerance must be positive, got {tol}");
    check_exponent(grid, p)?;
    ensure!(moduli.len() == grid.len(), Domain, "sample count mismatch");
    ensure!(moduli.iter().all(|a| a.is_finite()), Domain, "non-finite samples");
    let max = moduli.iter().fold(S::zero(), |m, &a| m.max(a));
    if max == S::zero() {
        return Ok(LuxemburgNorm { value: S::zero(), bracket: (S::zero(), S::zero()), modular_at_norm: S::zero(), iterations: 0 });
    }
    let rho = |lambda: S| modular_of_moduli(grid, moduli, p, lambda);
    let support = S::of(moduli.iter().filter(|&&a| a > S::zero()).count()) * grid.cell_volume();
    let lambda0 = max * support.powf(p.p_minus().recip());
    let two = S::lit(2.0);

    let r0 = rho(lambda0);
    let ((mut lo, mut rlo), (mut hi, mut rhi)) = if r0 > S::one() {
        let (mut lo, mut rlo) = (lambda0, r0);
        let mut hi = lambda0 * two;
        let mut rhi = rho(hi);
        while rhi > S::one() {
            (lo, rlo) = (hi, rhi);
            hi = hi * two;
            rhi = rho(hi);
        }
        ((lo, rlo), (hi, rhi))
    } else {
        let (mut hi, mut rhi) = (lambda0, r0);
        let mut lo = lambda0 / two;
        let mut rlo = rho(lo);
        while rlo <= S::one() {
            (hi, rhi) = (lo, rlo);
            lo = lo / two;
            rlo = rho(lo);
        }
        ((lo, rlo), (hi, rhi))
    };

    let mut iterations = 0;
    let update = |x: S, r: S, lo: &mut (S, S), hi: &mut (S, S)| {
        if r > S::one() {
            *lo = (x, r);
        } else {
            *hi = (x, r);
        }
    };
    while hi - lo > tol * hi && iterations < MAX_ITERATIONS {
        iterations += 1;
        let usable = rlo.is_finite() && rhi > S::zero() && (iterations % 4 != 0);
        let estimate = if usable {
            let (llo, lhi) = (lo.ln(), hi.ln());
            let (glo, ghi) = (rlo.ln(), rhi.ln());
            let s = llo + (lhi - llo) * glo / (glo - ghi);
            s.exp()
        } else {
            (lo + hi) / two
        };
        let width = hi - lo;
        let delta = (S::lit(0.4) * tol * estimate).max(width * S::lit(1e-3));
        let mut a = (lo, rlo);
        let mut b = (hi, rhi);
        for x in [estimate - delta, estimate + delta] {
            if x > a.0 && x < b.0 {
                let r = rho(x);
                update(x, r, &mut a, &mut b);
            }
        }
        if b.0 - a.0 >= width {
            let mid = (a.0 + b.0) / two;
            let r = rho(mid);
            update(mid, r, &mut a, &mut b);
        }
        (lo, rlo) = a;
        (hi, rhi) = b;
    }
    Ok(LuxemburgNorm { value: hi, bracket: (lo, hi), modular_at_norm: rhi, iterations })
}

/// `inf{λ > 0 : ρ(f/λ) ≤ 1}` to relative bracket width `tol`.
pub fn luxemburg_norm<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>, tol: S) -> Result<LuxemburgNorm<S>> {
    luxemburg_of_moduli(f.grid(), &f.abs(), p, tol)
}

/// Shorthand for the norm value at [`DEFAULT_TOL`].
pub fn norm<S: Real>(f: &GridFunction<S>, p: &VariableExponent<S>) -> Result<S> {
    Ok(luxemburg_norm(f, p, S::lit(DEFAULT_TOL))?.value)
}

pub fn norm_of_moduli<S: Real>(grid: &Grid<S>, moduli: &[S], p: &VariableExponent<S>) -> Result<S> {
    Ok(luxemburg_of_moduli(grid, moduli, p, S::lit(DEFAULT_TOL))?.value)
}

/// `∫|fg|` and its ratio against `‖f‖_{p(·)} ‖g‖_{p*(·)}`.
pub fn holder_pairing<S: Real>(f: &GridFunction<S>, g: &GridFunction<S>, p: &VariableExponent<S>) -> Result<HolderPairing<S>> {
    ensure!(p.p_minus() >= S::one(), Precondition, "Hölder pairing needs p_minus >= 1, got {}", p.p_minus());
    ensure!(f.grid().same_as(g.grid()), Domain, "grid mismatch");
    let dual = dual_exponent(p)?;
    let products: Vec<S> = f.samples().iter().zip(g.samples()).map(|(a, b)| (a * b).norm()).collect();
    let lhs = crate::grid::quadrature_real(f.grid(), &products);
    let nf = norm(f, p)?;
    let ng = norm(g, &dual)?;
    let denom = nf * ng;
    let ratio = if denom == S::zero() { S::zero() } else { lhs / denom };
    Ok(HolderPairing { lhs, ratio })
}

/// Lower bound for the associate norm `sup{|∫fg| : ‖g‖_{p*} ≤ 1}`.
///
/// Candidates are `trials` random unit-norm `g` plus the near-optimizer
/// `g ∝ sgn(f̄)|f/‖f‖|^{p-1}` normalized in `L^{p*}`.
pub fn norm_lower_bound_by_duality<S: Real, R: Rng + ?Sized>(f: &GridFunction<S>, p: &VariableExponent<S>, trials: usize, rng: &mut R) -> Result<S> {
    ensure!(p.p_minus() >= S::one(), Precondition, "duality bound needs p_minus >= 1, got {}", p.p_minus());
    ensure!(trials >= 1, Precondition, "need at least one trial");
    if f.is_zero() {
        return Ok(S::zero());
    }
    let grid = *f.grid();
    let dual = dual_exponent(p)?;
    let nf = norm(f, p)?;
    let pairing = |g: &GridFunction<S>| -> Result<S> {
        let ng = norm(g, &dual)?;
        if ng == S::zero() {
            return Ok(S::zero());
        }
        let sum = f.samples().iter().zip(g.samples()).fold(Complex::new(S::zero(), S::zero()), |acc, (a, b)| acc + a * b);
        Ok((sum * grid.cell_volume()).norm() / ng)
    };

    let optimizer: Vec<Complex<S>> = f
        .samples()
        .iter()
        .zip(p.values())
        .map(|(z, &e)| {
            let m = z.norm();
            if m == S::zero() {
                Complex::new(S::zero(), S::zero())
            } else {
                z.conj() / m * (m / nf).powf(e - S::one())
            }
        })
        .collect();
    let mut best = pairing(&GridFunction::new(grid, optimizer, "dual-optimizer")?)?;
    for _ in 0..trials {
        let samples = (0..grid.len()).map(|_| Complex::new(S::lit(rng.gen_range(-1.0..1.0)), S::lit(rng.gen_range(-1.0..1.0)))).collect();
        best = best.max(pairing(&GridFunction::new(grid, samples, "dual-random")?)?);
    }
    Ok(best)
}

/// Constant `max(c^{1/p₋}, c^{1/p₊}, 1)` bounding `‖f‖/δ` whenever `ρ(f/δ) ≤ c`.
pub fn modular_bound_constant<S: Real>(c: S, p_minus: S, p_plus: S) -> S {
    c.powf(p_minus.recip()).max(c.powf(p_plus.recip())).max(S::one())
}
