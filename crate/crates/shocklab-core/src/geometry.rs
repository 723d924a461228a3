//! Acoustic characteristic geometry.
//!
//! The eikonal function u solves g⁻¹(du, du) = 0 with ∂_t u > 0 for the
//! acoustical metric g built from (c, v); its level sets are the sound
//! characteristics.  From u we derive
//!
//! * the inverse foliation density μ = 1/(c|∇u|) — μ → 0 is shock formation;
//! * the dynamic frame {L, X, Y, Z}: L the rescaled null generator
//!   (L⁰ = 1, Lⁱ = vⁱ − Xⁱ), X the Σ_t-tangent transversal with
//!   Xⁱ = μc²∂ᵢu and Σ(Xⁱ)² = c², X̌ = μX, and torus-tangent Y, Z;
//! * the transport equation for μ along L, assembled from the metric's
//!   dependence on the wave array (the G-arrays);
//! * shock-time prediction from the μ⋆ history and singular-set location.
//!
//! Directional derivatives of the wave array along the frame are assembled
//! through the evolution equations (Lf = Bf − X·∇f with Bf from the Euler
//! equations) rather than raw time stencils: the equation path keeps the
//! truncation error spatial, which is what lets the rescaled derivatives
//! stay clean while Cartesian ones blow up.

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::kernel::{self, Grid};
use crate::state::Fields;
use serde::{Deserialize, Serialize};

/// Runs abort (not error) when μ drops below this floor; X̌ = μX assembly
/// is meaningless past it.
pub const MU_FLOOR: f64 = 1e-3;

/// |∇u| below this is a degenerate front.
pub const GRAD_FLOOR: f64 = 1e-8;

/// μ⋆ threshold below which `Auto` switches the eikonal Hamiltonian to the
/// monotone first-order upwind form.
pub const UPWIND_SWITCH: f64 = 0.15;

/// Spatial-gradient scheme for the eikonal Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientScheme {
    /// Centered stencils at the grid order (smooth regime).
    Central,
    /// Godunov-type first-order upwinding (monotone, late-time fallback).
    Upwind,
    /// Central until μ⋆ < 0.15, then upwind.
    #[default]
    Auto,
}

/// Initial eikonal: u(0, x) = σ̊ − x¹, so the u = σ̊ level set starts at
/// x¹ = 0 and X̌|_{t=0} = −∂₁.
pub fn initial_u(grid: &Grid, sigma: f64) -> Vec<f64> {
    grid.sample(|x1, _, _| sigma - x1)
}

/// ∂_t u = −v·∇u + c|∇u| (the positive root of the eikonal equation).
///
/// `mu_hint` lets `Auto` decide which Hamiltonian discretization applies;
/// pass 1.0 when no better information exists.
pub fn eikonal_rhs(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    u: &[f64],
    scheme: GradientScheme,
    mu_hint: f64,
) -> Result<Vec<f64>> {
    let upwind = match scheme {
        GradientScheme::Central => false,
        GradientScheme::Upwind => true,
        GradientScheme::Auto => mu_hint < UPWIND_SWITCH,
    };
    if upwind {
        eikonal_rhs_upwind(grid, eos, fields, u)
    } else {
        eikonal_rhs_central(grid, eos, fields, u)
    }
}

fn eikonal_rhs_central(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    u: &[f64],
) -> Result<Vec<f64>> {
    let du = grid.grad(u);
    let n = grid.cells();
    let mut rate = vec![0.0; n];
    let mut min_grad = f64::INFINITY;
    for i in 0..n {
        let g2 = du[0][i] * du[0][i] + du[1][i] * du[1][i] + du[2][i] * du[2][i];
        let gn = g2.sqrt();
        min_grad = min_grad.min(gn);
        let c = eos.c(fields.rho[i], fields.s[i]);
        rate[i] = -(fields.v[0][i] * du[0][i]
            + fields.v[1][i] * du[1][i]
            + fields.v[2][i] * du[2][i])
            + c * gn;
    }
    if min_grad < GRAD_FLOOR {
        return Err(Error::DegenerateFront {
            min_grad,
            floor: GRAD_FLOOR,
        });
    }
    Ok(rate)
}

/// Monotone first-order Hamiltonian: the advection part −v·∇u upwinds on the
/// sign of v per axis; the expansion part c|∇u| uses the Rouy–Tourin choice
/// for ∂_t u = +c|∇u|, i.e. |∂_a u| → max(−D⁻_a u, D⁺_a u, 0).
fn eikonal_rhs_upwind(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    u: &[f64],
) -> Result<Vec<f64>> {
    let (n1, n2, n3) = (grid.n1, grid.n2, grid.n3);
    let h = [grid.h(0), grid.h(1), grid.h(2)];
    let n = grid.cells();
    let mut rate = vec![0.0; n];
    let mut min_grad = f64::INFINITY;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let idx = grid.idx(i1, i2, i3);
                // One-sided differences per axis; x¹ clamps at the slab
                // edges (exterior value extrapolated as the node itself →
                // zero difference), x²/x³ wrap.
                let center = u[idx];
                let mut dm = [0.0; 3];
                let mut dp = [0.0; 3];
                if i1 > 0 {
                    dm[0] = (center - u[grid.idx(i1 - 1, i2, i3)]) / h[0];
                }
                if i1 + 1 < n1 {
                    dp[0] = (u[grid.idx(i1 + 1, i2, i3)] - center) / h[0];
                }
                if i1 == 0 {
                    dm[0] = dp[0];
                }
                if i1 + 1 == n1 {
                    dp[0] = dm[0];
                }
                if n2 > 1 {
                    dm[1] = (center - u[grid.idx(i1, (i2 + n2 - 1) % n2, i3)]) / h[1];
                    dp[1] = (u[grid.idx(i1, (i2 + 1) % n2, i3)] - center) / h[1];
                }
                if n3 > 1 {
                    dm[2] = (center - u[grid.idx(i1, i2, (i3 + n3 - 1) % n3)]) / h[2];
                    dp[2] = (u[grid.idx(i1, i2, (i3 + 1) % n3)] - center) / h[2];
                }

                let vv = [fields.v[0][idx], fields.v[1][idx], fields.v[2][idx]];
                let mut advect = 0.0;
                let mut g2 = 0.0;
                for a in 0..3 {
                    // −v·∇u: information flows along dx/dt = v.
                    let d_adv = if vv[a] > 0.0 { dm[a] } else { dp[a] };
                    advect -= vv[a] * d_adv;
                    let g = (-dm[a]).max(dp[a]).max(0.0);
                    g2 += g * g;
                }
                let gn = g2.sqrt();
                min_grad = min_grad.min(gn);
                let c = eos.c(fields.rho[idx], fields.s[idx]);
                rate[idx] = advect + c * gn;
            }
        }
    }
    if min_grad < GRAD_FLOOR {
        return Err(Error::DegenerateFront {
            min_grad,
            floor: GRAD_FLOOR,
        });
    }
    Ok(rate)
}

/// μ = 1/(c|∇u|), the inverse foliation density (equal to −1/g⁻¹(dt, du)).
pub fn mu_from_gradient(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    u: &[f64],
) -> Result<Vec<f64>> {
    let du = grid.grad(u);
    let n = grid.cells();
    let mut mu = vec![0.0; n];
    let mut min_grad = f64::INFINITY;
    for i in 0..n {
        let gn = (du[0][i] * du[0][i] + du[1][i] * du[1][i] + du[2][i] * du[2][i]).sqrt();
        min_grad = min_grad.min(gn);
        mu[i] = 1.0 / (eos.c(fields.rho[i], fields.s[i]) * gn);
    }
    if min_grad < GRAD_FLOOR {
        return Err(Error::DegenerateFront {
            min_grad,
            floor: GRAD_FLOOR,
        });
    }
    Ok(mu)
}

/// μ⋆ = min{1, min over the grid of μ}.
pub fn mu_star_value(mu: &[f64]) -> f64 {
    kernel::det_min(mu).min(1.0)
}

/// The dynamic frame at one instant.  All vectors are stored by Cartesian
/// spatial components; the time components are fixed: L⁰ = 1, X⁰ = Y⁰ = Z⁰ = 0.
pub struct Frame {
    pub mu: Vec<f64>,
    /// Xⁱ = μc²∂ᵢu (Σ-tangent transversal, g(X,X) = 1, points opposite ∂₁
    /// on the background).
    pub x: [Vec<f64>; 3],
    /// Lⁱ = vⁱ − Xⁱ (rescaled null generator).
    pub l: [Vec<f64>; 3],
    /// Yⁱ = δ₂ⁱ − c⁻²X²Xⁱ.
    pub y: [Vec<f64>; 3],
    /// Zⁱ = δ₃ⁱ − c⁻²X³Xⁱ.
    pub z: [Vec<f64>; 3],
}

impl Frame {
    /// X̌ = μX components.
    pub fn x_check(&self) -> [Vec<f64>; 3] {
        let mut out = [
            self.x[0].clone(),
            self.x[1].clone(),
            self.x[2].clone(),
        ];
        for comp in out.iter_mut() {
            for (xc, &m) in comp.iter_mut().zip(self.mu.iter()) {
                *xc *= m;
            }
        }
        out
    }
}

/// Assemble the frame from the eikonal gradient.  L⁰ is evaluated through
/// the full formula −μ(g⁻¹)⁰ᵅ∂_α u (with ∂_t u from the eikonal equation)
/// and checked against its exact value 1.
pub fn frame(grid: &Grid, eos: &EquationOfState, fields: &Fields, u: &[f64]) -> Result<Frame> {
    let du = grid.grad(u);
    let n = grid.cells();
    let mut mu = vec![0.0; n];
    let mut x = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut l = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut y = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut z = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut worst_l0 = 0.0_f64;
    let mut min_grad = f64::INFINITY;
    for i in 0..n {
        let g1 = du[0][i];
        let g2 = du[1][i];
        let g3 = du[2][i];
        let gn = (g1 * g1 + g2 * g2 + g3 * g3).sqrt();
        min_grad = min_grad.min(gn);
        if gn < GRAD_FLOOR {
            continue;
        }
        let c = eos.c(fields.rho[i], fields.s[i]);
        let c2 = c * c;
        let m = 1.0 / (c * gn);
        mu[i] = m;
        let xi = [m * c2 * g1, m * c2 * g2, m * c2 * g3];
        // L⁰ = μ(∂_t u + v·∇u) with ∂_t u = −v·∇u + c|∇u|.
        let v_du = fields.v[0][i] * g1 + fields.v[1][i] * g2 + fields.v[2][i] * g3;
        let dtu = -v_du + c * gn;
        let l0 = m * (dtu + v_du);
        worst_l0 = worst_l0.max((l0 - 1.0).abs());
        for a in 0..3 {
            x[a][i] = xi[a];
            l[a][i] = fields.v[a][i] * l0 - xi[a];
        }
        let inv_c2 = 1.0 / c2;
        for a in 0..3 {
            y[a][i] = -inv_c2 * xi[1] * xi[a];
            z[a][i] = -inv_c2 * xi[2] * xi[a];
        }
        y[1][i] += 1.0;
        z[2][i] += 1.0;
    }
    if min_grad < GRAD_FLOOR {
        return Err(Error::DegenerateFront {
            min_grad,
            floor: GRAD_FLOOR,
        });
    }
    if worst_l0 > 1e-6 {
        return Err(Error::FrameConsistency(format!(
            "L⁰ deviates from 1 by {worst_l0:.3e}"
        )));
    }
    Ok(Frame { mu, x, l, y, z })
}

/// g(U, W) for the acoustical metric with spacetime vectors given as
/// (U⁰, Uⁱ): g = −dt² + c⁻²Σᵢ(dxⁱ − vⁱdt)².
#[inline]
fn metric_dot(c: f64, v: [f64; 3], u0: f64, ui: [f64; 3], w0: f64, wi: [f64; 3]) -> f64 {
    let mut spatial = 0.0;
    for a in 0..3 {
        spatial += (ui[a] - v[a] * u0) * (wi[a] - v[a] * w0);
    }
    -u0 * w0 + spatial / (c * c)
}

/// Sup-norms of the frame/eikonal identity battery.
#[derive(Debug, Clone)]
pub struct FrameIdentityReport {
    pub g_ll: f64,
    pub g_lx_plus_one: f64,
    pub g_xx_minus_one: f64,
    pub g_ly: f64,
    pub g_xy: f64,
    pub g_lz: f64,
    pub g_xz: f64,
    pub x_norm_minus_c2: f64,
    pub lu: f64,
    pub xcheck_u_minus_one: f64,
    pub mu_two_way: f64,
}

impl FrameIdentityReport {
    /// Largest violation across the battery.
    pub fn worst(&self) -> f64 {
        [
            self.g_ll,
            self.g_lx_plus_one,
            self.g_xx_minus_one,
            self.g_ly,
            self.g_xy,
            self.g_lz,
            self.g_xz,
            self.x_norm_minus_c2,
            self.lu,
            self.xcheck_u_minus_one,
            self.mu_two_way,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluate the identity battery on one snapshot.
///
/// `du_dt` supplies ∂_t u from an independent source (time stencils over the
/// evolved history) — that makes Lu, L⁰ and the two-way μ comparison
/// non-vacuous.  With `None`, ∂_t u comes from the eikonal equation itself
/// and those rows only check internal algebra.
pub fn frame_identity_report(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    u: &[f64],
    du_dt: Option<&[f64]>,
) -> Result<FrameIdentityReport> {
    let fr = frame(grid, eos, fields, u)?;
    let du = grid.grad(u);
    let n = grid.cells();
    let mut rep = FrameIdentityReport {
        g_ll: 0.0,
        g_lx_plus_one: 0.0,
        g_xx_minus_one: 0.0,
        g_ly: 0.0,
        g_xy: 0.0,
        g_lz: 0.0,
        g_xz: 0.0,
        x_norm_minus_c2: 0.0,
        lu: 0.0,
        xcheck_u_minus_one: 0.0,
        mu_two_way: 0.0,
    };
    for i in 0..n {
        let c = eos.c(fields.rho[i], fields.s[i]);
        let v = [fields.v[0][i], fields.v[1][i], fields.v[2][i]];
        let li = [fr.l[0][i], fr.l[1][i], fr.l[2][i]];
        let xi = [fr.x[0][i], fr.x[1][i], fr.x[2][i]];
        let yi = [fr.y[0][i], fr.y[1][i], fr.y[2][i]];
        let zi = [fr.z[0][i], fr.z[1][i], fr.z[2][i]];
        rep.g_ll = rep.g_ll.max(metric_dot(c, v, 1.0, li, 1.0, li).abs());
        rep.g_lx_plus_one = rep
            .g_lx_plus_one
            .max((metric_dot(c, v, 1.0, li, 0.0, xi) + 1.0).abs());
        rep.g_xx_minus_one = rep
            .g_xx_minus_one
            .max((metric_dot(c, v, 0.0, xi, 0.0, xi) - 1.0).abs());
        rep.g_ly = rep.g_ly.max(metric_dot(c, v, 1.0, li, 0.0, yi).abs());
        rep.g_xy = rep.g_xy.max(metric_dot(c, v, 0.0, xi, 0.0, yi).abs());
        rep.g_lz = rep.g_lz.max(metric_dot(c, v, 1.0, li, 0.0, zi).abs());
        rep.g_xz = rep.g_xz.max(metric_dot(c, v, 0.0, xi, 0.0, zi).abs());
        let xn = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        rep.x_norm_minus_c2 = rep.x_norm_minus_c2.max((xn - c * c).abs());

        let dtu = match du_dt {
            Some(r) => r[i],
            None => {
                let v_du = v[0] * du[0][i] + v[1] * du[1][i] + v[2] * du[2][i];
                let gn =
                    (du[0][i] * du[0][i] + du[1][i] * du[1][i] + du[2][i] * du[2][i]).sqrt();
                -v_du + c * gn
            }
        };
        // Lu = L⁰∂_t u + Lⁱ∂ᵢu with L⁰ = 1; X̌u = μXⁱ∂ᵢu.
        let lu = dtu + li[0] * du[0][i] + li[1] * du[1][i] + li[2] * du[2][i];
        rep.lu = rep.lu.max(lu.abs());
        let xcu = fr.mu[i] * (xi[0] * du[0][i] + xi[1] * du[1][i] + xi[2] * du[2][i]);
        rep.xcheck_u_minus_one = rep.xcheck_u_minus_one.max((xcu - 1.0).abs());
        // Two-way μ: 1/(c|∇u|) against 1/(∂_t u + v·∇u).
        let v_du = v[0] * du[0][i] + v[1] * du[1][i] + v[2] * du[2][i];
        let mu_b = 1.0 / (dtu + v_du);
        rep.mu_two_way = rep.mu_two_way.max((fr.mu[i] - mu_b).abs());
    }
    Ok(rep)
}

/// Material derivatives BΨ of the wave array, straight from the Euler
/// equations (no time stencils):
/// Bℛ± = Bv¹ ± c·Bρ̃, Bv^j = −c²∂_jρ̃ − e^{−ρ̃}p_;s ∂_j s, Bρ̃ = −div v, Bs = 0.
pub fn material_rates_of_psi(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
) -> Result<[Vec<f64>; 5]> {
    let grad_rho = grid.grad(&fields.rho);
    let grad_s = grid.grad(&fields.s);
    let div_v = grid.div([&fields.v[0], &fields.v[1], &fields.v[2]]);
    let n = grid.cells();
    let mut out = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        let rho = fields.rho[i];
        let s = fields.s[i];
        let c = eos.c(rho, s);
        let ps = eos.p_s(rho, s);
        let em = (-rho).exp();
        let bv = [
            -c * c * grad_rho[0][i] - em * ps * grad_s[0][i],
            -c * c * grad_rho[1][i] - em * ps * grad_s[1][i],
            -c * c * grad_rho[2][i] - em * ps * grad_s[2][i],
        ];
        let b_rho = -div_v[i];
        out[0][i] = bv[0] + c * b_rho;
        out[1][i] = bv[0] - c * b_rho;
        out[2][i] = bv[1];
        out[3][i] = bv[2];
        // Bs = 0 identically.
    }
    Ok(out)
}

/// Frame derivatives of the wave array: L, X̌, Y, Z applied to each Ψ_ι.
///
/// X̌, Y, Z are spatial (X̌Ψ = μXᵃ∂ₐΨ etc.); L uses the equation path
/// LΨ = BΨ − XᵃΨ_{,a} with BΨ from `material_rates_of_psi`.
///
/// Spatial gradients of ℛ± are assembled from primitive-field gradients by
/// the exact pointwise chain rule, ∂ₐℛ± = ∂ₐv¹ ± (c∂ₐρ̃ + F_;s∂ₐs), rather
/// than by differencing the derived arrays: differencing does not commute
/// with the chain rule, and the exact route is what makes the transport
/// algebra below close to rounding instead of to truncation order.
pub struct PsiFrameDerivatives {
    pub l: [Vec<f64>; 5],
    pub x_check: [Vec<f64>; 5],
    pub y: [Vec<f64>; 5],
    pub z: [Vec<f64>; 5],
}

pub fn psi_frame_derivatives(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    fr: &Frame,
) -> Result<PsiFrameDerivatives> {
    let b_psi = material_rates_of_psi(grid, eos, fields)?;
    let grad_rho = grid.grad(&fields.rho);
    let grad_v1 = grid.grad(&fields.v[0]);
    let grad_v2 = grid.grad(&fields.v[1]);
    let grad_v3 = grid.grad(&fields.v[2]);
    let grad_s = grid.grad(&fields.s);
    let n = grid.cells();
    let mut out = PsiFrameDerivatives {
        l: std::array::from_fn(|_| vec![0.0; n]),
        x_check: std::array::from_fn(|_| vec![0.0; n]),
        y: std::array::from_fn(|_| vec![0.0; n]),
        z: std::array::from_fn(|_| vec![0.0; n]),
    };
    for i in 0..n {
        let rho = fields.rho[i];
        let s = fields.s[i];
        let c = eos.c(rho, s);
        let f_s = eos.f_s(rho, s)?;
        for (k, dpsi) in [
            [
                grad_v1[0][i] + c * grad_rho[0][i] + f_s * grad_s[0][i],
                grad_v1[1][i] + c * grad_rho[1][i] + f_s * grad_s[1][i],
                grad_v1[2][i] + c * grad_rho[2][i] + f_s * grad_s[2][i],
            ],
            [
                grad_v1[0][i] - c * grad_rho[0][i] - f_s * grad_s[0][i],
                grad_v1[1][i] - c * grad_rho[1][i] - f_s * grad_s[1][i],
                grad_v1[2][i] - c * grad_rho[2][i] - f_s * grad_s[2][i],
            ],
            [grad_v2[0][i], grad_v2[1][i], grad_v2[2][i]],
            [grad_v3[0][i], grad_v3[1][i], grad_v3[2][i]],
            [grad_s[0][i], grad_s[1][i], grad_s[2][i]],
        ]
        .into_iter()
        .enumerate()
        {
            let x_dot = fr.x[0][i] * dpsi[0] + fr.x[1][i] * dpsi[1] + fr.x[2][i] * dpsi[2];
            out.x_check[k][i] = fr.mu[i] * x_dot;
            out.l[k][i] = b_psi[k][i] - x_dot;
            out.y[k][i] = fr.y[0][i] * dpsi[0] + fr.y[1][i] * dpsi[1] + fr.y[2][i] * dpsi[2];
            out.z[k][i] = fr.z[0][i] * dpsi[0] + fr.z[1][i] * dpsi[1] + fr.z[2][i] * dpsi[2];
        }
    }
    Ok(out)
}

/// Pointwise partials of (c, v) with respect to the wave array at fixed
/// companions: the ingredients of the metric's G-arrays.
///
/// Order of Ψ: (ℛ₊, ℛ₋, v², v³, s).
#[inline]
fn psi_partials(
    eos: &EquationOfState,
    rho: f64,
    s: f64,
) -> Result<([f64; 5], [[f64; 3]; 5])> {
    let c = eos.c(rho, s);
    let c_rho = eos.c_rho(rho, s);
    let c_s = eos.c_s(rho, s);
    let f_s = eos.f_s(rho, s)?;
    // ∂ρ̃/∂ℛ± = ±1/(2c); ∂ρ̃/∂s at fixed ℛ± = −F_;s/c.
    let dc = [
        c_rho / (2.0 * c),
        -c_rho / (2.0 * c),
        0.0,
        0.0,
        c_s - c_rho * f_s / c,
    ];
    let dv = [
        [0.5, 0.0, 0.0],
        [0.5, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
    ];
    Ok((dc, dv))
}

/// G-array contractions with the frame: G^ι_{LL} and G^ι_{LX}, where
/// G^ι = ∂g/∂Ψ_ι.  Derived from g = −dt² + c⁻²Σ(dxⁱ−vⁱdt)² with
/// (dxⁱ−vⁱdt)(L) = −Xⁱ, (dxⁱ−vⁱdt)(X) = Xⁱ:
///   G^ι_{LL} = −2c⁻¹(∂c/∂Ψ_ι) + 2c⁻²(∂v/∂Ψ_ι)·X
///   G^ι_{LX} = +2c⁻¹(∂c/∂Ψ_ι) − c⁻²(∂v/∂Ψ_ι)·X
pub fn g_contractions(
    eos: &EquationOfState,
    fields: &Fields,
    fr: &Frame,
) -> Result<(Vec<[f64; 5]>, Vec<[f64; 5]>)> {
    let n = fields.cells();
    let mut g_ll = vec![[0.0; 5]; n];
    let mut g_lx = vec![[0.0; 5]; n];
    for i in 0..n {
        let rho = fields.rho[i];
        let s = fields.s[i];
        let c = eos.c(rho, s);
        let (dc, dv) = psi_partials(eos, rho, s)?;
        let xi = [fr.x[0][i], fr.x[1][i], fr.x[2][i]];
        for k in 0..5 {
            let dv_dot_x = dv[k][0] * xi[0] + dv[k][1] * xi[1] + dv[k][2] * xi[2];
            g_ll[i][k] = -2.0 * dc[k] / c + 2.0 * dv_dot_x / (c * c);
            g_lx[i][k] = 2.0 * dc[k] / c - dv_dot_x / (c * c);
        }
    }
    Ok((g_ll, g_lx))
}

/// Right-hand side of the μ transport equation, assembled through the chain
/// rule: Lμ = ½ G⃗_LL ⋄ X̌Ψ − ½ μ G⃗_LL ⋄ LΨ − μ G⃗_LX ⋄ LΨ.
pub fn mu_transport_rhs_chain(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    fr: &Frame,
) -> Result<Vec<f64>> {
    let derivs = psi_frame_derivatives(grid, eos, fields, fr)?;
    let (g_ll, g_lx) = g_contractions(eos, fields, fr)?;
    let n = grid.cells();
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..5 {
            acc += 0.5 * g_ll[i][k] * derivs.x_check[k][i]
                - 0.5 * fr.mu[i] * g_ll[i][k] * derivs.l[k][i]
                - fr.mu[i] * g_lx[i][k] * derivs.l[k][i];
        }
        rhs[i] = acc;
    }
    Ok(rhs)
}

/// The expanded closed form of the dominant half-term ½ G⃗_LL ⋄ X̌Ψ:
///
///   −½c⁻¹(c⁻¹c_;ρ + 1)(X̌ℛ₊ − X̌ℛ₋) − ½μc⁻²X¹(Lℛ₊ + Lℛ₋)
///   − μc⁻²(X²Lv² + X³Lv³) − μc⁻¹c_;s XᵃSᵃ
///   + μc⁻¹(c⁻¹c_;ρ + 1)F_;s XᵃSᵃ − μc⁻²e^{−ρ̃}p_;s XᵃSᵃ
///
/// (the final p_;s term is absent from isentropic treatments and is easy to
/// drop by mistake; the cross-check test against the chain-rule assembly is
/// what pins it).  Equality with ½ G⃗_LL ⋄ X̌Ψ holds pointwise once LΨ is
/// defined through the evolution equations.
pub fn mu_key_term_closed_form(
    grid: &Grid,
    eos: &EquationOfState,
    fields: &Fields,
    fr: &Frame,
) -> Result<Vec<f64>> {
    let derivs = psi_frame_derivatives(grid, eos, fields, fr)?;
    let s_grad = fields.entropy_grad(grid);
    let n = grid.cells();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let rho = fields.rho[i];
        let s = fields.s[i];
        let c = eos.c(rho, s);
        let c_rho = eos.c_rho(rho, s);
        let c_s = eos.c_s(rho, s);
        let f_s = eos.f_s(rho, s)?;
        let p_s = eos.p_s(rho, s);
        let mu = fr.mu[i];
        let kappa_c = c_rho / c + 1.0;
        let x_dot_s = fr.x[0][i] * s_grad[0][i]
            + fr.x[1][i] * s_grad[1][i]
            + fr.x[2][i] * s_grad[2][i];
        out[i] = -0.5 / c * kappa_c * (derivs.x_check[0][i] - derivs.x_check[1][i])
            - 0.5 * mu / (c * c) * fr.x[0][i] * (derivs.l[0][i] + derivs.l[1][i])
            - mu / (c * c) * (fr.x[1][i] * derivs.l[2][i] + fr.x[2][i] * derivs.l[3][i])
            - mu / c * c_s * x_dot_s
            + mu / c * kappa_c * f_s * x_dot_s
            - mu / (c * c) * (-rho).exp() * p_s * x_dot_s;
    }
    Ok(out)
}

/// Residual of the μ transport equation on a 5-snapshot history window:
/// Lμ (time stencil plus advection) minus the chain-rule right-hand side at
/// the center snapshot.  `snaps` must hold 5 consecutive (fields, u) pairs
/// separated by `dt`.
pub fn mu_transport_residual(
    grid: &Grid,
    eos: &EquationOfState,
    snaps: &[(&Fields, &[f64])],
    dt: f64,
) -> Result<Vec<f64>> {
    if snaps.len() != 5 {
        return Err(Error::Config(format!(
            "μ-transport residual needs 5 snapshots, got {}",
            snaps.len()
        )));
    }
    let mus: Vec<Vec<f64>> = snaps
        .iter()
        .map(|(f, u)| mu_from_gradient(grid, eos, f, u))
        .collect::<Result<_>>()?;
    let (fields, u) = (snaps[2].0, snaps[2].1);
    let fr = frame(grid, eos, fields, u)?;
    let rhs = mu_transport_rhs_chain(grid, eos, fields, &fr)?;
    let dmu = grid.grad(&mus[2]);
    let n = grid.cells();
    let mut res = vec![0.0; n];
    for i in 0..n {
        // ∂_t μ by the 5-point stencil, then Lμ = ∂_tμ + (vᵃ − Xᵃ)∂ₐμ.
        let dt_mu =
            (mus[0][i] - 8.0 * mus[1][i] + 8.0 * mus[3][i] - mus[4][i]) / (12.0 * dt);
        let mut adv = 0.0;
        for a in 0..3 {
            adv += (fields.v[a][i] - fr.x[a][i]) * dmu[a][i];
        }
        res[i] = dt_mu + adv - rhs[i];
    }
    Ok(res)
}

/// Affine fit of the μ⋆ history over the fit window μ⋆ ∈ [0.1, 0.6].
#[derive(Debug, Clone)]
pub struct ShockFit {
    /// Predicted singular time (zero crossing of the fit).
    pub t_hat: f64,
    /// Fitted slope dμ⋆/dt (compare against −δ*).
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of history points inside the fit window.
    pub n_points: usize,
}

pub const FIT_WINDOW: (f64, f64) = (0.1, 0.6);

/// Least-squares affine fit μ⋆(t) = a + b·t over the window, with the
/// predicted blowup time T̂ = −a/b.
pub fn predict_shock_time(history: &[(f64, f64)]) -> Result<ShockFit> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .copied()
        .filter(|&(_, m)| m >= FIT_WINDOW.0 && m <= FIT_WINDOW.1)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Numerical {
            context: format!(
                "shock-time fit needs ≥3 history points with μ⋆ in [{}, {}]",
                FIT_WINDOW.0, FIT_WINDOW.1
            ),
            achieved: pts.len() as f64,
            required: 3.0,
        });
    }
    let n = pts.len() as f64;
    let st: f64 = pts.iter().map(|p| p.0).sum();
    let sm: f64 = pts.iter().map(|p| p.1).sum();
    let stt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let stm: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * stt - st * st;
    if denom.abs() < 1e-300 {
        return Err(Error::Numerical {
            context: "shock-time fit: degenerate time column".into(),
            achieved: denom,
            required: f64::MIN_POSITIVE,
        });
    }
    let slope = (n * stm - st * sm) / denom;
    let intercept = (sm - slope * st) / n;
    let mean = sm / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for &(t, m) in &pts {
        let fit = intercept + slope * t;
        ss_res += (m - fit) * (m - fit);
        ss_tot += (m - mean) * (m - mean);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    if slope >= 0.0 {
        return Err(Error::Numerical {
            context: "shock-time fit: μ⋆ not decreasing over the window".into(),
            achieved: slope,
            required: 0.0,
        });
    }
    Ok(ShockFit {
        t_hat: -intercept / slope,
        slope,
        intercept,
        r_squared,
        n_points: pts.len(),
    })
}

/// One cell of the (near-)singular set.
#[derive(Debug, Clone, Serialize)]
pub struct SingularCell {
    /// Flat grid index (for sampling other fields at the same cell).
    pub idx: usize,
    /// Geometric coordinates of the cell: the eikonal value and the torus
    /// coordinates.
    pub u: f64,
    pub x2: f64,
    pub x3: f64,
    /// Cartesian x¹ of the cell, for reference.
    pub x1: f64,
    pub mu: f64,
}

/// Cells where μ < threshold, mapped to geometric coordinates (u, x², x³),
/// sorted by μ ascending.
pub fn locate_singular_set(
    grid: &Grid,
    u: &[f64],
    mu: &[f64],
    threshold: f64,
) -> Vec<SingularCell> {
    let mut out = Vec::new();
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            for i3 in 0..grid.n3 {
                let idx = grid.idx(i1, i2, i3);
                if mu[idx] < threshold {
                    out.push(SingularCell {
                        idx,
                        u: u[idx],
                        x2: grid.x2(i2),
                        x3: grid.x3(i3),
                        x1: grid.x1(i1),
                        mu: mu[idx],
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| a.mu.partial_cmp(&b.mu).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn background_setup(v1: f64) -> (Grid, EquationOfState, Fields, Vec<f64>) {
        let grid = Grid::new(32, 1, 1, -1.0, 1.0, 4).unwrap();
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let fields = Fields::background(&grid, v1);
        let u = initial_u(&grid, 0.3);
        (grid, eos, fields, u)
    }

    /// A smooth, genuinely 3D state (not an Euler solution — the algebraic
    /// identities hold on any fields).
    fn wiggly_setup() -> (Grid, EquationOfState, Fields, Vec<f64>) {
        let grid = Grid::new(24, 12, 12, -1.0, 1.0, 2).unwrap();
        let eos = EquationOfState::polytropic(2.0).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let mut fields = Fields::background(&grid, 0.0);
        fields.rho = grid.sample(|x1, x2, _| 0.08 * (1.3 * x1).sin() + 0.03 * (tau * x2).cos());
        fields.v[0] = grid.sample(|x1, _, x3| 0.05 * (0.9 * x1).cos() + 0.02 * (tau * x3).sin());
        fields.v[1] = grid.sample(|x1, x2, _| 0.04 * (1.1 * x1).sin() * (tau * x2).sin());
        fields.v[2] = grid.sample(|_, x2, x3| 0.03 * (tau * x2).cos() * (tau * x3).cos());
        fields.s = grid.sample(|x1, _, x3| 0.06 * (0.8 * x1).cos() + 0.02 * (tau * x3).cos());
        let u = grid.sample(|x1, x2, x3| {
            0.3 - x1 + 0.05 * (1.2 * x1).sin() + 0.02 * (tau * x2).sin() + 0.015 * (tau * x3).cos()
        });
        (grid, eos, fields, u)
    }

    #[test]
    fn background_rate_is_unity_and_boost_shifts_it() {
        let (grid, eos, fields, u) = background_setup(0.0);
        let rate = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Central, 1.0).unwrap();
        for &r in &rate {
            assert!((r - 1.0).abs() < 1e-12);
        }
        // Rigid translation v = (V, 0, 0): ∂_t u = 1 + V.
        let v = -1.0;
        let (grid, eos, fields, u) = background_setup(v);
        let rate = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Central, 1.0).unwrap();
        for &r in &rate {
            assert!((r - (1.0 + v)).abs() < 1e-12);
        }
        // The upwind Hamiltonian agrees exactly on this linear profile.
        let rate_up = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Upwind, 1.0).unwrap();
        for (&a, &b) in rate.iter().zip(rate_up.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn auto_scheme_switches_on_mu_hint() {
        // On a curved u the central and upwind rates differ; Auto must pick
        // central for μ⋆ ≥ 0.15 and upwind below.
        let (grid, eos, fields, _) = wiggly_setup();
        let u = grid.sample(|x1, x2, _| {
            0.3 - x1 + 0.1 * (1.5 * x1).sin() + 0.04 * (2.0 * std::f64::consts::PI * x2).sin()
        });
        let central =
            eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Central, 1.0).unwrap();
        let upwind = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Upwind, 1.0).unwrap();
        let auto_hi = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Auto, 0.5).unwrap();
        let auto_lo = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Auto, 0.1).unwrap();
        assert_eq!(central, auto_hi);
        assert_eq!(upwind, auto_lo);
        let diff: f64 = central
            .iter()
            .zip(upwind.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-6, "schemes should differ on curved data");
    }

    #[test]
    fn upwind_converges_at_first_order_to_smooth_hamiltonian() {
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let mut errs = Vec::new();
        for n1 in [64, 128, 256] {
            let grid = Grid::new(n1, 1, 1, -1.0, 1.0, 4).unwrap();
            let mut fields = Fields::background(&grid, 0.2);
            fields.rho = grid.sample(|x1, _, _| 0.05 * (1.1 * x1).sin());
            let u = grid.sample(|x1, _, _| 0.3 - x1 + 0.2 * (1.3 * x1).sin());
            let up = eikonal_rhs(&grid, &eos, &fields, &u, GradientScheme::Upwind, 1.0).unwrap();
            // Exact Hamiltonian from analytic ∇u.
            let mut worst = 0.0_f64;
            for i1 in 2..grid.n1 - 2 {
                let x1 = grid.x1(i1);
                let du = -1.0 + 0.2 * 1.3 * (1.3 * x1).cos();
                let c = eos.c(fields.rho[i1], 0.0);
                let exact = -0.2 * du + c * du.abs();
                worst = worst.max((up[i1] - exact).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        println!("upwind eikonal errors {errs:?} → order {order:.2}");
        assert!(order > 0.8, "upwind should be ≈ first order, got {order}");
    }

    #[test]
    fn mu_is_inverse_sound_speed_at_time_zero() {
        // With u = σ̊ − x¹, |∇u| = 1 and μ = 1/c pointwise.
        let grid = Grid::new(48, 1, 1, -1.0, 1.0, 4).unwrap();
        let eos = EquationOfState::polytropic(3.0).unwrap();
        let mut fields = Fields::background(&grid, 0.0);
        fields.rho = grid.sample(|x1, _, _| 0.2 * (1.7 * x1).sin());
        let u = initial_u(&grid, 0.25);
        let mu = mu_from_gradient(&grid, &eos, &fields, &u).unwrap();
        for i in 0..grid.cells() {
            let c = eos.c(fields.rho[i], 0.0);
            assert!((mu[i] - 1.0 / c).abs() < 1e-12);
        }
        let expected = fields
            .rho
            .iter()
            .map(|&r| 1.0 / eos.c(r, 0.0))
            .fold(f64::INFINITY, f64::min);
        assert!((mu_star_value(&mu) - expected).abs() < 1e-12);
    }

    #[test]
    fn mu_star_caps_at_one() {
        assert_eq!(mu_star_value(&[1.7, 2.0, 3.0]), 1.0);
        assert_eq!(mu_star_value(&[0.3, 0.9, 1.4]), 0.3);
    }

    #[test]
    fn background_frame_is_the_flat_frame() {
        let (grid, eos, fields, u) = background_setup(0.0);
        let fr = frame(&grid, &eos, &fields, &u).unwrap();
        for i in 0..grid.cells() {
            assert!((fr.mu[i] - 1.0).abs() < 1e-12);
            assert!((fr.x[0][i] + 1.0).abs() < 1e-12); // X = −∂₁
            assert!(fr.x[1][i].abs() < 1e-12 && fr.x[2][i].abs() < 1e-12);
            assert!((fr.l[0][i] - 1.0).abs() < 1e-12); // L = ∂_t + ∂₁
            assert!((fr.y[1][i] - 1.0).abs() < 1e-12 && fr.y[0][i].abs() < 1e-12);
            assert!((fr.z[2][i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_identity_battery_on_wiggly_state() {
        let (grid, eos, fields, u) = wiggly_setup();
        let rep = frame_identity_report(&grid, &eos, &fields, &u, None).unwrap();
        // These identities are algebraic consequences of the construction,
        // so they must hold to rounding regardless of the state.
        assert!(rep.worst() < 1e-10, "battery violation: {rep:#?}");
    }

    #[test]
    fn closed_form_matches_chain_rule_to_rounding() {
        let (grid, eos, fields, u) = wiggly_setup();
        let fr = frame(&grid, &eos, &fields, &u).unwrap();
        let derivs = psi_frame_derivatives(&grid, &eos, &fields, &fr).unwrap();
        let (g_ll, _) = g_contractions(&eos, &fields, &fr).unwrap();
        let n = grid.cells();
        let mut chain = vec![0.0; n];
        for i in 0..n {
            for k in 0..5 {
                chain[i] += 0.5 * g_ll[i][k] * derivs.x_check[k][i];
            }
        }
        let closed = mu_key_term_closed_form(&grid, &eos, &fields, &fr).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..n {
            worst = worst.max((chain[i] - closed[i]).abs());
        }
        assert!(worst < 1e-13, "closed form deviates by {worst:.3e}");
    }

    #[test]
    fn mu_transport_residual_vanishes_on_background() {
        let (grid, eos, fields, _) = background_setup(0.0);
        // Exact background eikonal history: u = σ̊ − x¹ + t.
        let dt = 0.01;
        let mut snaps_owned = Vec::new();
        for k in 0..5 {
            let t = dt * (k as f64 - 2.0);
            snaps_owned.push(grid.sample(|x1, _, _| 0.3 - x1 + t));
        }
        let snaps: Vec<(&Fields, &[f64])> =
            snaps_owned.iter().map(|u| (&fields, u.as_slice())).collect();
        let res = mu_transport_residual(&grid, &eos, &snaps, dt).unwrap();
        assert!(kernel::det_max_abs(&res) < 1e-11);
    }

    #[test]
    fn shock_fit_recovers_synthetic_affine_decay() {
        let hist: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.01;
                (t, 1.0 - 0.5 * t)
            })
            .collect();
        let fit = predict_shock_time(&hist).unwrap();
        assert!((fit.t_hat - 2.0).abs() < 1e-10);
        assert!((fit.slope + 0.5).abs() < 1e-10);
        assert!(fit.r_squared > 1.0 - 1e-12);
        // All fit points lie inside the window.
        assert!(fit.n_points > 50);
    }

    #[test]
    fn shock_fit_rejects_flat_history() {
        let hist: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.01, 0.4)).collect();
        assert!(predict_shock_time(&hist).is_err());
    }

    #[test]
    fn singular_set_finds_mu_dips() {
        let grid = Grid::new(64, 1, 1, -1.0, 1.0, 4).unwrap();
        let u = initial_u(&grid, 0.3);
        let mut mu = vec![0.8; grid.cells()];
        mu[20] = 0.03;
        mu[40] = 0.01;
        let cells = locate_singular_set(&grid, &u, &mu, 0.05);
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].idx, 40); // sorted ascending in μ
        assert!((cells[0].u - (0.3 - grid.x1(40))).abs() < 1e-12);
        assert!(locate_singular_set(&grid, &u, &mu, 0.005).is_empty());
    }

    #[test]
    fn degenerate_front_is_reported() {
        let grid = Grid::new(32, 1, 1, -1.0, 1.0, 4).unwrap();
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let fields = Fields::background(&grid, 0.0);
        let u = vec![0.5; grid.cells()];
        match mu_from_gradient(&grid, &eos, &fields, &u) {
            Err(Error::DegenerateFront { .. }) => {}
            other => panic!("expected degenerate front, got {other:?}"),
        }
    }
}
