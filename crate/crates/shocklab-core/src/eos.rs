//! Equation-of-state closures for the log-density form of the Euler system.
//!
//! Every thermodynamic coefficient the rest of the crate needs is a function
//! of the logarithmic density `rho` (written ρ̃ in the docs) and the entropy
//! `s`, normalized so the quiet state has unit sound speed: c(0, 0) = 1 and
//! the reference density is 1.  The supported closures are
//!
//! * `Polytropic { gamma }` — p = eˢϱ^γ/γ, so c = exp(((γ−1)ρ̃ + s)/2);
//! * `Chaplygin` — p = p₀ − 1/ϱ, entropy-independent, c = exp(−ρ̃);
//! * `Tabulated` — a positive natural cubic spline ρ̃ ↦ c(ρ̃), entropy-
//!   independent, for experiments with measured sound-speed curves.
//!
//! Besides c and its partials, the module provides the entropy derivatives of
//! pressure that appear in the reformulated source terms, the wave-speed
//! integral F(ρ̃, s) = ∫₀^ρ̃ c(r, s) dr that builds the Riemann-invariant-like
//! variables, and the inverse map F ↦ ρ̃ used to reconstruct states from wave
//! variables.
//!
//! All evaluations are restricted to the admissible box ρ̃ ∈ [−2, 2],
//! s ∈ [−1, 1]; leaving it is a domain error that names the offending
//! variable.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Admissible range of the logarithmic density.
pub const RHO_RANGE: (f64, f64) = (-2.0, 2.0);
/// Admissible range of the entropy.
pub const S_RANGE: (f64, f64) = (-1.0, 1.0);

/// Absolute tolerance required of the quadrature behind tabulated F values.
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Residual tolerance required of the inverse map F ↦ ρ̃.
pub const INVERT_TOL: f64 = 1e-12;

/// Thermodynamic closure.  See the module docs for the three variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eos {
    Polytropic { gamma: f64 },
    Chaplygin,
    Tabulated { nodes: Vec<(f64, f64)> },
}

/// A tabulated closure carries its spline pre-built; `Eos` is the serialized
/// description, `Closure` is the evaluation-ready object.
#[derive(Debug, Clone)]
pub struct EquationOfState {
    kind: Eos,
    spline: Option<CubicSpline>,
}

impl EquationOfState {
    /// Build an evaluation-ready closure, validating the description.
    pub fn new(kind: Eos) -> Result<Self> {
        match &kind {
            Eos::Polytropic { gamma } => {
                if !(*gamma >= 1.0 && *gamma <= 10.0) {
                    return Err(Error::Domain {
                        variable: "gamma",
                        value: *gamma,
                        min: 1.0,
                        max: 10.0,
                    });
                }
                Ok(Self { kind, spline: None })
            }
            Eos::Chaplygin => Ok(Self { kind, spline: None }),
            Eos::Tabulated { nodes } => {
                let spline = CubicSpline::natural(nodes)?;
                // The spline must cover the admissible box and stay positive on it.
                if spline.x_min() > RHO_RANGE.0 || spline.x_max() < RHO_RANGE.1 {
                    return Err(Error::Config(format!(
                        "tabulated sound speed must cover rho in [{}, {}], got [{}, {}]",
                        RHO_RANGE.0,
                        RHO_RANGE.1,
                        spline.x_min(),
                        spline.x_max()
                    )));
                }
                let n_probe = 4096;
                for i in 0..=n_probe {
                    let r = RHO_RANGE.0 + (RHO_RANGE.1 - RHO_RANGE.0) * i as f64 / n_probe as f64;
                    let c = spline.eval(r);
                    if !(c > 1e-6) {
                        return Err(Error::Config(format!(
                            "tabulated sound speed not positive: c({r:.6}) = {c:.3e}"
                        )));
                    }
                }
                Ok(Self {
                    kind,
                    spline: Some(spline),
                })
            }
        }
    }

    pub fn polytropic(gamma: f64) -> Result<Self> {
        Self::new(Eos::Polytropic { gamma })
    }

    pub fn chaplygin() -> Self {
        Self::new(Eos::Chaplygin).expect("chaplygin closure has no parameters")
    }

    pub fn kind(&self) -> &Eos {
        &self.kind
    }

    /// Reject states outside the admissible box, naming the offender.
    pub fn check_admissible(&self, rho: f64, s: f64) -> Result<()> {
        if !(rho >= RHO_RANGE.0 && rho <= RHO_RANGE.1) || rho.is_nan() {
            return Err(Error::Domain {
                variable: "rho",
                value: rho,
                min: RHO_RANGE.0,
                max: RHO_RANGE.1,
            });
        }
        if !(s >= S_RANGE.0 && s <= S_RANGE.1) || s.is_nan() {
            return Err(Error::Domain {
                variable: "s",
                value: s,
                min: S_RANGE.0,
                max: S_RANGE.1,
            });
        }
        Ok(())
    }

    /// Sound speed c(ρ̃, s).
    pub fn c(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { gamma } => (0.5 * ((gamma - 1.0) * rho + s)).exp(),
            Eos::Chaplygin => (-rho).exp(),
            Eos::Tabulated { .. } => self.spline.as_ref().unwrap().eval(rho),
        }
    }

    /// ∂c/∂ρ̃ at fixed s.
    pub fn c_rho(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { gamma } => 0.5 * (gamma - 1.0) * self.c(rho, s),
            Eos::Chaplygin => -self.c(rho, s),
            Eos::Tabulated { .. } => self.spline.as_ref().unwrap().deriv(rho),
        }
    }

    /// ∂c/∂s at fixed ρ̃.
    pub fn c_s(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { .. } => 0.5 * self.c(rho, s),
            Eos::Chaplygin | Eos::Tabulated { .. } => 0.0,
        }
    }

    /// Genuine-nonlinearity coefficient κ = c⁻¹(c⁻¹ c_;ρ + 1).
    ///
    /// κ weights the compression gradient in the inverse-foliation-density
    /// transport law; it vanishes identically for the Chaplygin closure,
    /// which is why that gas forms no shocks from simple waves.
    pub fn kappa(&self, rho: f64, s: f64) -> f64 {
        let c = self.c(rho, s);
        (self.c_rho(rho, s) / c + 1.0) / c
    }

    /// ∂p/∂s at fixed ϱ, divided by the reference density (which is 1).
    pub fn p_s(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { gamma } => (s + gamma * rho).exp() / gamma,
            Eos::Chaplygin | Eos::Tabulated { .. } => 0.0,
        }
    }

    /// ∂²p/∂s∂ρ̃ (the ρ̃-derivative of `p_s`).
    pub fn p_s_rho(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { gamma } => gamma * self.p_s(rho, s),
            Eos::Chaplygin | Eos::Tabulated { .. } => 0.0,
        }
    }

    /// ∂²p/∂s² at fixed ϱ.
    pub fn p_s_s(&self, rho: f64, s: f64) -> f64 {
        match &self.kind {
            Eos::Polytropic { .. } => self.p_s(rho, s),
            Eos::Chaplygin | Eos::Tabulated { .. } => 0.0,
        }
    }

    /// Wave-speed integral F(ρ̃, s) = ∫₀^ρ̃ c(r, s) dr.
    pub fn big_f(&self, rho: f64, s: f64) -> Result<f64> {
        match &self.kind {
            Eos::Polytropic { gamma } => {
                let gm1 = gamma - 1.0;
                if gm1.abs() < 1e-12 {
                    Ok((0.5 * s).exp() * rho)
                } else {
                    Ok(2.0 / gm1 * (0.5 * s).exp() * ((0.5 * gm1 * rho).exp() - 1.0))
                }
            }
            Eos::Chaplygin => Ok(1.0 - (-rho).exp()),
            Eos::Tabulated { .. } => {
                let spline = self.spline.as_ref().unwrap();
                let (val, achieved) =
                    adaptive_simpson(|r| spline.eval(r), 0.0, rho, QUADRATURE_TOL, 40);
                if achieved > QUADRATURE_TOL {
                    return Err(Error::Numerical {
                        context: "adaptive quadrature of the sound-speed integral".into(),
                        achieved,
                        required: QUADRATURE_TOL,
                    });
                }
                Ok(val)
            }
        }
    }

    /// ∂F/∂s at fixed ρ̃.
    pub fn f_s(&self, rho: f64, s: f64) -> Result<f64> {
        match &self.kind {
            // c_;s = c/2 for every polytropic index, so F_;s = F/2.
            Eos::Polytropic { .. } => Ok(0.5 * self.big_f(rho, s)?),
            Eos::Chaplygin | Eos::Tabulated { .. } => Ok(0.0),
        }
    }

    /// ∂²F/∂s² at fixed ρ̃.
    pub fn f_s_s(&self, rho: f64, s: f64) -> Result<f64> {
        match &self.kind {
            Eos::Polytropic { .. } => Ok(0.25 * self.big_f(rho, s)?),
            Eos::Chaplygin | Eos::Tabulated { .. } => Ok(0.0),
        }
    }

    /// Invert F(·, s) on the admissible box: find ρ̃ with F(ρ̃, s) = f_val.
    ///
    /// F is strictly increasing in ρ̃ (c > 0), so the root is unique when it
    /// exists; a safeguarded Newton iteration (bisection fallback) is run to
    /// |F(ρ̃) − f_val| < 1e−12, seeded with the closed-form inverse where one
    /// exists.
    pub fn invert_f(&self, f_val: f64, s: f64) -> Result<f64> {
        let f_lo = self.big_f(RHO_RANGE.0, s)?;
        let f_hi = self.big_f(RHO_RANGE.1, s)?;
        if !(f_val >= f_lo && f_val <= f_hi) || f_val.is_nan() {
            return Err(Error::Domain {
                variable: "F",
                value: f_val,
                min: f_lo,
                max: f_hi,
            });
        }

        // Closed-form seeds; exact for the analytic closures.
        let mut x = match &self.kind {
            Eos::Polytropic { gamma } => {
                let gm1 = gamma - 1.0;
                if gm1.abs() < 1e-12 {
                    f_val * (-0.5 * s).exp()
                } else {
                    let arg = 1.0 + 0.5 * gm1 * (-0.5 * s).exp() * f_val;
                    if arg > 0.0 {
                        2.0 / gm1 * arg.ln()
                    } else {
                        0.0
                    }
                }
            }
            Eos::Chaplygin => {
                if f_val < 1.0 {
                    -(1.0 - f_val).ln()
                } else {
                    RHO_RANGE.1
                }
            }
            Eos::Tabulated { .. } => f_val, // c(0)≈O(1); crude but bracketed below
        };
        x = x.clamp(RHO_RANGE.0, RHO_RANGE.1);

        let (mut lo, mut hi) = (RHO_RANGE.0, RHO_RANGE.1);
        let mut residual = f64::INFINITY;
        for _ in 0..80 {
            let fx = self.big_f(x, s)? - f_val;
            residual = fx.abs();
            if residual < INVERT_TOL {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dfx = self.c(x, s);
            let newton = x - fx / dfx;
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::Numerical {
            context: "inversion of the sound-speed integral".into(),
            achieved: residual,
            required: INVERT_TOL,
        })
    }
}

/// Natural cubic spline through strictly increasing nodes.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the nodes (natural: zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::Config(format!(
                "cubic spline needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let x: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let y: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        for w in x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config(
                    "cubic spline nodes must be strictly increasing".into(),
                ));
            }
        }
        // Tridiagonal system for the interior second derivatives (Thomas).
        let n = x.len();
        let mut a = vec![0.0; n];
        let b = vec![2.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            a[i] = h0 / (h0 + h1);
            c[i] = h1 / (h0 + h1);
            d[i] = 6.0 / (h0 + h1) * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        // Natural ends: m0 = m_{n-1} = 0 (b = 2, d = 0 already).
        let mut m = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        dp[0] = d[0] / b[0];
        for i in 1..n {
            let denom = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / denom;
            dp[i] = (d[i] - a[i] * dp[i - 1]) / denom;
        }
        m[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = dp[i] - cp[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.binary_search_by(|xi| xi.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }
}

/// Adaptive Simpson quadrature with an absolute-error budget.
///
/// Returns `(value, achieved_error_estimate)`; the caller decides whether the
/// estimate met its requirement.  Depth is capped to keep the recursion
/// finite on pathological integrands.
pub fn adaptive_simpson<Func: Fn(f64) -> f64>(
    f: Func,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> (f64, f64) {
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<Func: Fn(f64) -> f64>(
        f: &Func,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let err = (left + right - whole) / 15.0;
        if err.abs() <= tol || depth == 0 {
            (left + right + err, err.abs())
        } else {
            let (lv, le) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
            let (rv, re) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
            (lv + rv, le + re)
        }
    }
    if a == b {
        return (0.0, 0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fm = f(0.5 * (lo + hi));
    let fb = f(hi);
    let whole = simpson(lo, hi, fa, fm, fb);
    let (v, e) = recurse(&f, lo, hi, fa, fm, fb, whole, tol, max_depth);
    (sign * v, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quiet_state_has_unit_sound_speed_for_every_closure() {
        let cases = [
            EquationOfState::polytropic(5.0 / 3.0).unwrap(),
            EquationOfState::polytropic(1.0).unwrap(),
            EquationOfState::polytropic(3.0).unwrap(),
            EquationOfState::chaplygin(),
            tabulated_exponential(),
        ];
        for eos in &cases {
            assert_relative_eq!(eos.c(0.0, 0.0), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn polytropic_gamma3_sound_speed_is_exponential() {
        let eos = EquationOfState::polytropic(3.0).unwrap();
        assert_relative_eq!(eos.c(1.0, 0.0), std::f64::consts::E, max_relative = 1e-14);
    }

    #[test]
    fn chaplygin_sound_speed_is_inverse_exponential() {
        let eos = EquationOfState::chaplygin();
        for rho in [-2.0, -0.7, 0.0, 0.3, 2.0] {
            assert_relative_eq!(eos.c(rho, 0.5), (-rho as f64).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn kappa_frozen_values() {
        // κ = c⁻¹(c⁻¹c_;ρ + 1); for polytropic closures κ = (γ+1)/(2c).
        let g2 = EquationOfState::polytropic(2.0).unwrap();
        assert_relative_eq!(g2.kappa(0.0, 0.0), 1.5, max_relative = 1e-14);

        let g1 = EquationOfState::polytropic(1.0).unwrap();
        assert_relative_eq!(g1.kappa(0.0, 0.0), 1.0, max_relative = 1e-14);

        let g3 = EquationOfState::polytropic(3.0).unwrap();
        assert_relative_eq!(
            g3.kappa(1.0, 0.0),
            2.0 / std::f64::consts::E,
            max_relative = 1e-14
        );

        let ch = EquationOfState::chaplygin();
        for rho in [-1.5, 0.0, 0.9] {
            assert!(ch.kappa(rho, -0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn wave_speed_integral_frozen_values() {
        let g3 = EquationOfState::polytropic(3.0).unwrap();
        for rho in [-1.0, 0.0, 0.5, 2.0] {
            assert_relative_eq!(
                g3.big_f(rho, 0.0).unwrap(),
                (rho as f64).exp() - 1.0,
                max_relative = 1e-14
            );
        }
        let g2 = EquationOfState::polytropic(2.0).unwrap();
        assert_relative_eq!(
            g2.big_f(1.0, 0.0).unwrap(),
            2.0 * ((0.5f64).exp() - 1.0),
            max_relative = 1e-14
        );
        let ch = EquationOfState::chaplygin();
        assert_relative_eq!(
            ch.big_f(1.0, 0.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn invert_f_round_trips_across_the_admissible_box() {
        let closures = [
            EquationOfState::polytropic(5.0 / 3.0).unwrap(),
            EquationOfState::polytropic(1.0).unwrap(),
            EquationOfState::polytropic(2.0).unwrap(),
            EquationOfState::polytropic(3.0).unwrap(),
            EquationOfState::chaplygin(),
            tabulated_exponential(),
        ];
        for eos in &closures {
            for i in 0..=40 {
                let rho = -2.0 + 4.0 * i as f64 / 40.0;
                for s in [-1.0, -0.3, 0.0, 1.0] {
                    let f = eos.big_f(rho, s).unwrap();
                    let back = eos.invert_f(f, s).unwrap();
                    assert!(
                        (back - rho).abs() <= 1e-10,
                        "round trip failed: rho = {rho}, got {back}"
                    );
                    let res = (eos.big_f(back, s).unwrap() - f).abs();
                    assert!(res < 1e-12, "residual {res} at rho = {rho}");
                }
            }
        }
    }

    #[test]
    fn invert_f_rejects_out_of_range_values() {
        let eos = EquationOfState::polytropic(2.0).unwrap();
        let f_hi = eos.big_f(2.0, 0.0).unwrap();
        match eos.invert_f(f_hi + 1.0, 0.0) {
            Err(Error::Domain { variable, .. }) => assert_eq!(variable, "F"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn admissibility_errors_name_the_offending_variable() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        match eos.check_admissible(2.5, 0.0) {
            Err(Error::Domain { variable, .. }) => assert_eq!(variable, "rho"),
            other => panic!("expected domain error, got {other:?}"),
        }
        match eos.check_admissible(0.0, -1.5) {
            Err(Error::Domain { variable, .. }) => assert_eq!(variable, "s"),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(eos.check_admissible(2.0, 1.0).is_ok());
    }

    /// Analytic partials must agree with central differences to O(h²).
    #[test]
    fn derivatives_match_finite_differences_at_second_order() {
        let closures = [
            EquationOfState::polytropic(1.4).unwrap(),
            EquationOfState::polytropic(3.0).unwrap(),
            EquationOfState::chaplygin(),
            tabulated_exponential(),
        ];
        let probes = [(-1.2, -0.5), (0.0, 0.0), (0.8, 0.7), (1.7, -0.9)];
        for eos in &closures {
            for &(rho, s) in &probes {
                for h in [1e-3, 1e-4] {
                    // FD truncation ~ |f'''| h²/6; the third derivatives of
                    // every closure here are O(c), so C = 2(1 + |value|) is a
                    // comfortable but non-vacuous constant.
                    let fd_c_rho = (eos.c(rho + h, s) - eos.c(rho - h, s)) / (2.0 * h);
                    let tol = 2.0 * (1.0 + eos.c(rho, s).abs()) * h * h;
                    assert!(
                        (fd_c_rho - eos.c_rho(rho, s)).abs() <= tol,
                        "c_rho FD mismatch at ({rho}, {s}), h = {h}"
                    );

                    let fd_c_s = (eos.c(rho, s + h) - eos.c(rho, s - h)) / (2.0 * h);
                    assert!(
                        (fd_c_s - eos.c_s(rho, s)).abs() <= tol,
                        "c_s FD mismatch at ({rho}, {s}), h = {h}"
                    );

                    let fd_f_s =
                        (eos.big_f(rho, s + h).unwrap() - eos.big_f(rho, s - h).unwrap())
                            / (2.0 * h);
                    let tol_f = 2.0 * (1.0 + eos.big_f(rho, s).unwrap().abs()) * h * h;
                    assert!(
                        (fd_f_s - eos.f_s(rho, s).unwrap()).abs() <= tol_f,
                        "F_s FD mismatch at ({rho}, {s}), h = {h}"
                    );

                    let fd_p_s_rho =
                        (eos.p_s(rho + h, s) - eos.p_s(rho - h, s)) / (2.0 * h);
                    let tol_p = 20.0 * (1.0 + eos.p_s(rho, s).abs()) * h * h;
                    assert!(
                        (fd_p_s_rho - eos.p_s_rho(rho, s)).abs() <= tol_p,
                        "p_s_rho FD mismatch at ({rho}, {s}), h = {h}"
                    );
                }
            }
        }
    }

    #[test]
    fn big_f_derivative_in_rho_is_the_sound_speed() {
        // F is defined by ∂F/∂ρ̃ = c; check with finite differences, which
        // also exercises the tabulated quadrature path.
        let closures = [
            EquationOfState::polytropic(2.0).unwrap(),
            tabulated_exponential(),
        ];
        for eos in &closures {
            for rho in [-1.5, -0.2, 0.0, 1.3] {
                let h = 1e-5;
                let fd = (eos.big_f(rho + h, 0.0).unwrap() - eos.big_f(rho - h, 0.0).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(fd, eos.c(rho, 0.0), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn tabulated_quadrature_meets_its_absolute_tolerance() {
        let eos = tabulated_exponential();
        // Against the dense-spline reference: integrate with a very fine
        // composite Simpson rule and compare.
        let spline_f = |t: f64| eos.c(t, 0.0);
        for rho in [-2.0, -0.3, 0.9, 2.0] {
            let n = 20_000;
            let mut acc = 0.0;
            let h = rho / n as f64;
            for i in 0..n {
                let a = i as f64 * h;
                acc += h / 6.0
                    * (spline_f(a) + 4.0 * spline_f(a + 0.5 * h) + spline_f(a + h));
            }
            let v = eos.big_f(rho, 0.0).unwrap();
            assert!(
                (v - acc).abs() < 1e-9,
                "quadrature vs dense Simpson at rho = {rho}: {v} vs {acc}"
            );
        }
    }

    /// Spline over an exp curve, covering the admissible box with margin.
    fn tabulated_exponential() -> EquationOfState {
        let n = 64;
        let nodes: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let r = -2.2 + 4.4 * i as f64 / n as f64;
                (r, (0.35 * r).exp())
            })
            .collect();
        EquationOfState::new(Eos::Tabulated { nodes }).unwrap()
    }
}
