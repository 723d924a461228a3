//! Exact 1D simple waves: the analytic backbone of the laboratory.
//!
//! A rightward simple wave is determined by its initial wave profile
//! ℛ₊(0, x¹) — compactly supported in [−σ̊, σ̊] with amplitude ≤ α̊ — together
//! with ℛ₋ ≡ 0 and s ≡ 0.  Each value of ℛ₊ rides its own characteristic
//! x(t) = x₀ + λ(ℛ₊(x₀))·t at the frozen speed λ(R) = v¹ + c = R/2 + c(ρ̃(R), 0),
//! so the solution stays exact until characteristics cross.  The module
//! provides:
//!
//! * the characteristic speed λ and its profile derivative;
//! * the blowup-rate functional δ* = sup ½[c·κ·(−∂₁ℛ₊)]₊ and the companion
//!   `blowup_time` = 1/sup[λ′·(−∂₁ℛ₊)]₊ — two independently coded paths that
//!   must agree because ½cκ = λ′ identically;
//! * `exact_state_at`: pointwise evaluation of the pre-shock solution by
//!   inverting the characteristic map (safeguarded Newton);
//! * a brute-force characteristic-crossing oracle for cross-checks.
//!
//! An optional bulk velocity V rigidly translates the whole picture
//! (v¹ → v¹ + V); gradients, blowup time and δ* are invariant under it.

use crate::eos::{CubicSpline, EquationOfState};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Number of samples used when a profile is given without an analytic
/// derivative; the derivative is then built by 6th-order finite differences
/// on this uniform sampling.
const PROFILE_SAMPLES: usize = 8192;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

enum Profile {
    /// Closed-form profile, optionally with a closed-form derivative.
    Callable { f: Callable, df: Option<Callable> },
    /// Sampled profile interpolated by a natural cubic spline.
    Spline(CubicSpline),
}

/// Initial data for a simple plane wave.
pub struct SimpleWaveData {
    profile: Profile,
    /// Spline of the profile derivative when no analytic one is available.
    dprofile: Option<CubicSpline>,
    /// Half-width of the support: ℛ₊(0, x¹) = 0 for |x¹| ≥ σ̊.
    pub sigma: f64,
    /// Amplitude bound: sup |ℛ₊| ≤ α̊.
    pub alpha: f64,
}

impl SimpleWaveData {
    /// Build from a closed-form profile.  `df` may carry the closed-form
    /// derivative; without it a 6th-order finite-difference derivative on
    /// 8192 samples is used.
    pub fn from_callable(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: Option<Callable>,
        sigma: f64,
        alpha: f64,
    ) -> Result<Self> {
        let f: Callable = Arc::new(f);
        let mut data = Self {
            profile: Profile::Callable { f, df },
            dprofile: None,
            sigma,
            alpha,
        };
        data.validate()?;
        if !matches!(&data.profile, Profile::Callable { df: Some(_), .. }) {
            data.dprofile = Some(data.build_fd_derivative());
        }
        Ok(data)
    }

    /// Build from samples on a uniform x¹ grid spanning the support.
    pub fn from_samples(xs: &[f64], ys: &[f64], sigma: f64, alpha: f64) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 8 {
            return Err(Error::Config(format!(
                "sampled profile needs matching xs/ys with at least 8 samples, got {}/{}",
                xs.len(),
                ys.len()
            )));
        }
        let nodes: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        let spline = CubicSpline::natural(&nodes)?;
        let mut data = Self {
            profile: Profile::Spline(spline),
            dprofile: None,
            sigma,
            alpha,
        };
        data.validate()?;
        data.dprofile = Some(data.build_fd_derivative());
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Domain {
                variable: "sigma",
                value: self.sigma,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::Domain {
                variable: "alpha",
                value: self.alpha,
                min: f64::MIN_POSITIVE,
                max: 0.5,
            });
        }
        // Support and amplitude checks on a dense sampling.
        let n = PROFILE_SAMPLES;
        for i in 0..=n {
            let x = -1.5 * self.sigma + 3.0 * self.sigma * i as f64 / n as f64;
            let y = self.eval_raw(x);
            if x.abs() >= self.sigma && y.abs() > 1e-12 * self.alpha.max(1e-30) {
                return Err(Error::Config(format!(
                    "profile not supported in [-sigma, sigma]: R({x:.6}) = {y:.3e}"
                )));
            }
            if y.abs() > self.alpha * (1.0 + 1e-10) {
                return Err(Error::Config(format!(
                    "profile exceeds amplitude bound alpha = {}: R({x:.6}) = {y:.3e}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }

    fn eval_raw(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::Callable { f, .. } => f(x),
            Profile::Spline(sp) => {
                if x <= sp.x_min() || x >= sp.x_max() {
                    0.0
                } else {
                    sp.eval(x)
                }
            }
        }
    }

    /// Initial wave profile ℛ₊(0, x¹); identically 0 outside the support.
    pub fn r_plus(&self, x: f64) -> f64 {
        if x.abs() >= self.sigma {
            0.0
        } else {
            self.eval_raw(x)
        }
    }

    /// Profile derivative ∂₁ℛ₊(0, x¹).
    pub fn d_r_plus(&self, x: f64) -> f64 {
        if x.abs() >= self.sigma {
            return 0.0;
        }
        match (&self.profile, &self.dprofile) {
            (Profile::Callable { df: Some(df), .. }, _) => df(x),
            (_, Some(sp)) => sp.eval(x),
            _ => unreachable!("derivative spline built at construction"),
        }
    }

    /// 6th-order finite-difference derivative on a uniform sampling, stored
    /// as a spline for fast interpolation.
    fn build_fd_derivative(&self) -> CubicSpline {
        let n = PROFILE_SAMPLES;
        let a = -self.sigma;
        let h = 2.0 * self.sigma / n as f64;
        let ys: Vec<f64> = (0..=n).map(|i| self.eval_raw(a + h * i as f64)).collect();
        // Centered 6th-order weights; one-sided rows fall back to the wing
        // of the support where the profile vanishes, so plain wrapping by
        // zero padding is exact there.
        let w = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        let get = |i: isize| -> f64 {
            if i < 0 || i > n as isize {
                0.0
            } else {
                ys[i as usize]
            }
        };
        let nodes: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let mut d = 0.0;
                for (k, &wk) in w.iter().enumerate() {
                    d += wk * get(i as isize + k as isize - 3);
                }
                (a + h * i as f64, d / h)
            })
            .collect();
        CubicSpline::natural(&nodes).expect("uniform nodes are strictly increasing")
    }
}

/// Characteristic speed of the rightward simple wave carrying value `r`:
/// λ(R) = v¹ + c = R/2 + c(ρ̃(R), 0), with ρ̃(R) from F(ρ̃, 0) = R/2.
pub fn simple_wave_speed(eos: &EquationOfState, r: f64) -> Result<f64> {
    let rho = eos.invert_f(0.5 * r, 0.0)?;
    Ok(0.5 * r + eos.c(rho, 0.0))
}

/// dλ/dR = ½(1 + c⁻¹c_;ρ) evaluated on the simple-wave state for value `r`.
pub fn simple_wave_speed_slope(eos: &EquationOfState, r: f64) -> Result<f64> {
    let rho = eos.invert_f(0.5 * r, 0.0)?;
    let c = eos.c(rho, 0.0);
    Ok(0.5 * (1.0 + eos.c_rho(rho, 0.0) / c))
}

/// Dense scan plus golden-section refinement of `g` over [a, b].
/// Returns (argmax, max).
fn scan_refine(g: &dyn Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    let h = (b - a) / samples as f64;
    for i in 0..=samples {
        let v = g(a + h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = a + h * best_i.saturating_sub(1) as f64;
    let mut hi = (a + h * (best_i + 1) as f64).min(b);
    // Golden-section to relative x-tolerance 1e−10.
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let tol = 1e-10 * (b - a).abs().max(1e-300);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while hi - lo > tol {
        if g1 < g2 {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + phi * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - phi * (hi - lo);
            g1 = g(x1);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, g(xm).max(best))
}

/// Blowup-rate functional δ* = sup over x¹ of ½[c·κ·(−∂₁ℛ₊)]₊, evaluated on
/// the simple-wave state (ρ̃(ℛ₊), s = 0).  Returns 0 for non-compressive
/// (monotone nondecreasing) profiles.
pub fn delta_star(eos: &EquationOfState, data: &SimpleWaveData) -> Result<f64> {
    let g = |x: f64| -> f64 {
        let r = data.r_plus(x);
        let w = data.d_r_plus(x);
        let rho = match eos.invert_f(0.5 * r, 0.0) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let c = eos.c(rho, 0.0);
        0.5 * c * eos.kappa(rho, 0.0) * (-w)
    };
    let (_, m) = scan_refine(&g, -data.sigma, data.sigma, PROFILE_SAMPLES);
    Ok(m.max(0.0))
}

/// First characteristic-crossing time 1 / sup[λ′(ℛ₊)·(−∂₁ℛ₊)]₊, exact for
/// simple waves.  Returns +∞ when no compression is present.
pub fn blowup_time(eos: &EquationOfState, data: &SimpleWaveData) -> Result<f64> {
    let g = |x: f64| -> f64 {
        let r = data.r_plus(x);
        let w = data.d_r_plus(x);
        match simple_wave_speed_slope(eos, r) {
            Ok(lp) => lp * (-w),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let (_, m) = scan_refine(&g, -data.sigma, data.sigma, PROFILE_SAMPLES);
    if m <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / m)
    }
}

/// Pointwise exact pre-shock state: invert x = x₀ + (V + λ(ℛ₊(x₀)))·t for the
/// launch point x₀, then read off the transported state.  Returns
/// (ρ̃, v¹, ℛ₊).  Errors with `ShockReached` at or beyond the first crossing.
pub fn exact_state_at(
    eos: &EquationOfState,
    data: &SimpleWaveData,
    bulk_velocity: f64,
    t: f64,
    x: f64,
) -> Result<(f64, f64, f64)> {
    let t_sing = blowup_time(eos, data)?;
    if t >= t_sing {
        return Err(Error::ShockReached {
            requested: t,
            t_sing,
        });
    }
    if t < 0.0 {
        return Err(Error::Domain {
            variable: "t",
            value: t,
            min: 0.0,
            max: t_sing,
        });
    }

    // Launch-point bracket from the extreme characteristic speeds.
    let lam0 = simple_wave_speed(eos, 0.0)?;
    let mut lam_lo = lam0;
    let mut lam_hi = lam0;
    for i in 0..=256 {
        let xx = -data.sigma + 2.0 * data.sigma * i as f64 / 256.0;
        let l = simple_wave_speed(eos, data.r_plus(xx))?;
        lam_lo = lam_lo.min(l);
        lam_hi = lam_hi.max(l);
    }
    let pad = 1e-9 + 1e-9 * x.abs();
    let mut lo = x - (bulk_velocity + lam_hi) * t - pad;
    let mut hi = x - (bulk_velocity + lam_lo) * t + pad;

    let shoot = |x0: f64| -> Result<f64> {
        let l = simple_wave_speed(eos, data.r_plus(x0))?;
        Ok(x0 + (bulk_velocity + l) * t - x)
    };
    // φ is strictly increasing pre-shock (φ' = 1 + t·λ'·∂₁ℛ₊ ≥ 1 − t/T > 0).
    let mut x0 = x - (bulk_velocity + lam0) * t;
    let mut f_lo = shoot(lo)?;
    let f_hi = shoot(hi)?;
    if f_lo > 0.0 || f_hi < 0.0 {
        // The target sits outside the influence cone: quiet state.
        if f_lo > 0.0 {
            // even the slowest launch overshoots — x is left of every ray
            x0 = x - (bulk_velocity + lam0) * t;
        }
        let r = data.r_plus(x0);
        let rho = eos.invert_f(0.5 * r, 0.0)?;
        return Ok((rho, bulk_velocity + 0.5 * r, r));
    }
    for _ in 0..200 {
        let fx = shoot(x0)?;
        if fx.abs() < 1e-13 * (1.0 + x.abs()) {
            break;
        }
        if fx > 0.0 {
            hi = x0;
        } else {
            lo = x0;
            f_lo = fx;
        }
        let r = data.r_plus(x0);
        let dlam = simple_wave_speed_slope(eos, r)? * data.d_r_plus(x0);
        let dphi = 1.0 + dlam * t;
        let newton = x0 - fx / dphi;
        x0 = if dphi > 1e-14 && newton > lo && newton < hi {
            newton
        } else {
            // Bisection step weighted by the bracket residuals.
            let _ = f_lo;
            0.5 * (lo + hi)
        };
    }
    let r = data.r_plus(x0);
    let rho = eos.invert_f(0.5 * r, 0.0)?;
    Ok((rho, bulk_velocity + 0.5 * r, r))
}

/// Brute-force characteristic-crossing oracle: the earliest pairwise crossing
/// time of `n` characteristics launched from a uniform sampling of the
/// support.  Agrees with `blowup_time` as n → ∞; used as a cross-check.
pub fn crossing_time_oracle(
    eos: &EquationOfState,
    data: &SimpleWaveData,
    n: usize,
) -> Result<f64> {
    let mut xs = Vec::with_capacity(n);
    let mut lams = Vec::with_capacity(n);
    for i in 0..n {
        let x = -data.sigma + 2.0 * data.sigma * i as f64 / (n - 1) as f64;
        xs.push(x);
        lams.push(simple_wave_speed(eos, data.r_plus(x))?);
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let dl = lams[j] - lams[i];
            if dl < 0.0 {
                let t = -(xs[j] - xs[i]) / dl;
                if t < best {
                    best = t;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_bump(sigma: f64, alpha: f64) -> SimpleWaveData {
        let s = sigma;
        let a = alpha;
        SimpleWaveData::from_callable(
            move |x: f64| {
                if x.abs() >= s {
                    0.0
                } else {
                    let z = std::f64::consts::PI * x / s;
                    a * 0.5 * (1.0 + z.cos())
                }
            },
            Some(Arc::new(move |x: f64| {
                if x.abs() >= s {
                    0.0
                } else {
                    let z = std::f64::consts::PI * x / s;
                    -a * 0.5 * (std::f64::consts::PI / s) * z.sin()
                }
            })),
            s,
            a,
        )
        .unwrap()
    }

    #[test]
    fn quiet_state_moves_at_unit_speed() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        assert!((simple_wave_speed(&eos, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma3_characteristic_speed_closed_form() {
        // γ = 3: F = e^ρ̃ − 1, so R = 2(e^a − 1) gives ρ̃ = a, c = e^a and
        // λ = R/2 + c = (e^a − 1) + e^a.
        let eos = EquationOfState::polytropic(3.0).unwrap();
        for a in [-0.5, -0.1, 0.0, 0.2, 0.6] {
            let r = 2.0 * ((a as f64).exp() - 1.0);
            let lam = simple_wave_speed(&eos, r).unwrap();
            let expect = ((a as f64).exp() - 1.0) + (a as f64).exp();
            assert!(
                (lam - expect).abs() < 1e-10,
                "a = {a}: {lam} vs {expect}"
            );
        }
    }

    #[test]
    fn blowup_time_times_delta_star_is_one() {
        // The two functionals are coded through different EOS paths
        // (κ = c⁻¹(c⁻¹c_;ρ + 1) vs λ' = ½(1 + c⁻¹c_;ρ)); their product being
        // 1 checks the identity ½cκ = λ' through every closure.
        let closures = [
            EquationOfState::polytropic(5.0 / 3.0).unwrap(),
            EquationOfState::polytropic(2.0).unwrap(),
            EquationOfState::polytropic(3.0).unwrap(),
        ];
        for eos in &closures {
            let data = cos_bump(0.4, 0.08);
            let t = blowup_time(eos, &data).unwrap();
            let d = delta_star(eos, &data).unwrap();
            let product = t * d;
            assert!(
                (product - 1.0).abs() < 1e-8,
                "T·δ* = {product} for {:?}",
                eos.kind()
            );
        }
    }

    #[test]
    fn brute_force_crossing_agrees_with_blowup_time() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let data = cos_bump(0.3, 0.05);
        let t_pairs = crossing_time_oracle(&eos, &data, 10_000).unwrap();
        let t = blowup_time(&eos, &data).unwrap();
        assert!(
            (t_pairs - t).abs() / t < 1e-6,
            "oracle {t_pairs} vs closed form {t}"
        );
    }

    #[test]
    fn degenerate_closure_never_focuses() {
        // Chaplygin gas: c = e^{−ρ̃} makes λ'(R) = ½(1 + c⁻¹c_;ρ) ≡ 0, so
        // characteristics are parallel no matter the profile.  δ* must come
        // out exactly 0 and the blowup time must be the +∞ sentinel.
        let eos = EquationOfState::chaplygin();
        let data = cos_bump(0.4, 0.08);
        assert_eq!(delta_star(&eos, &data).unwrap(), 0.0);
        assert!(blowup_time(&eos, &data).unwrap().is_infinite());
    }

    #[test]
    fn delta_star_scales_linearly_in_amplitude() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let base = delta_star(&eos, &cos_bump(0.4, 0.04)).unwrap();
        let half = delta_star(&eos, &cos_bump(0.4, 0.02)).unwrap();
        // δ*(a·profile) = a·δ*(profile)·(1 + O(a)): at these amplitudes the
        // ratio must be 0.5 to about 1%.
        let ratio = half / base;
        assert!(
            (ratio - 0.5).abs() < 0.01,
            "amplitude scaling ratio {ratio}"
        );
    }

    #[test]
    fn exact_state_transports_values_and_preserves_sup() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let data = cos_bump(0.3, 0.06);
        let t_sing = blowup_time(&eos, &data).unwrap();
        let t = 0.5 * t_sing;

        // Values are transported along characteristics: querying the exact
        // state at the transported position x₀ + λ(ℛ₊(x₀))·t must return the
        // launch value.  Sup-norm preservation follows.
        let mut sup0 = 0.0_f64;
        let mut supt = 0.0_f64;
        for i in 0..=20_000 {
            let x0 = -0.35 + 0.7 * i as f64 / 20_000.0;
            let r0 = data.r_plus(x0);
            let x = x0 + simple_wave_speed(&eos, r0).unwrap() * t;
            let (_, _, r) = exact_state_at(&eos, &data, 0.0, t, x).unwrap();
            assert!(
                (r - r0).abs() < 1e-9,
                "transport broke at x0 = {x0}: {r} vs {r0}"
            );
            sup0 = sup0.max(r0.abs());
            supt = supt.max(r.abs());
        }
        assert!(
            (supt - sup0).abs() <= 1e-9,
            "sup drifted: {supt} vs {sup0}"
        );

        // At t = 0 inversion is the identity.
        for x in [-0.25, 0.0, 0.13] {
            let (rho, v1, r) = exact_state_at(&eos, &data, 0.0, 0.0, x).unwrap();
            assert!((r - data.r_plus(x)).abs() < 1e-12);
            assert!((v1 - 0.5 * data.r_plus(x)).abs() < 1e-12);
            let f = eos.big_f(rho, 0.0).unwrap();
            assert!((f - 0.5 * r).abs() < 1e-12);
        }

        // At or beyond the singular time the request errors.
        match exact_state_at(&eos, &data, 0.0, t_sing, 0.0) {
            Err(Error::ShockReached { .. }) => {}
            other => panic!("expected shock error, got {other:?}"),
        }
    }

    #[test]
    fn bulk_velocity_translates_without_changing_blowup() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let data = cos_bump(0.3, 0.06);
        let t = 0.4 * blowup_time(&eos, &data).unwrap();
        // exact_state_at in the boosted frame equals the lab frame shifted
        // by V·t in position and V in velocity.
        let v_bulk = -1.0;
        for x in [-0.2, 0.0, 0.1, 0.35] {
            let (rho_lab, v_lab, _) = exact_state_at(&eos, &data, 0.0, t, x).unwrap();
            let (rho_b, v_b, _) =
                exact_state_at(&eos, &data, v_bulk, t, x + v_bulk * t).unwrap();
            assert!((rho_lab - rho_b).abs() < 1e-11);
            assert!((v_lab + v_bulk - v_b).abs() < 1e-11);
        }
    }

    #[test]
    fn sampled_profiles_reproduce_callable_results() {
        let eos = EquationOfState::polytropic(2.0).unwrap();
        let reference = cos_bump(0.4, 0.05);
        let n = 4096;
        let xs: Vec<f64> = (0..=n).map(|i| -0.4 + 0.8 * i as f64 / n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| reference.r_plus(x)).collect();
        let sampled = SimpleWaveData::from_samples(&xs, &ys, 0.4, 0.05).unwrap();
        let d_ref = delta_star(&eos, &reference).unwrap();
        let d_smp = delta_star(&eos, &sampled).unwrap();
        assert!(
            (d_ref - d_smp).abs() / d_ref < 1e-6,
            "delta* from samples drifted: {d_smp} vs {d_ref}"
        );
    }
}
