//! The evolved fluid state and the derived fields built from it.
//!
//! The integrator evolves the primitive set (ρ̃, v¹, v², v³, s).  Analysis
//! happens in the wave array Ψ = (ℛ₊, ℛ₋, v², v³, s) with ℛ± = v¹ ± F(ρ̃, s),
//! and in the higher-order derived fields: the renormalized vorticity
//! Ω = e^{−ρ̃} curl v, the entropy gradient S = ∇s, and the modified
//! combinations 𝒞 and 𝒟 that satisfy clean transport equations.

use crate::eos::EquationOfState;
use crate::error::Result;
use crate::kernel::{self, Grid};

/// Primitive fields on a grid: logarithmic density, velocity, entropy.
#[derive(Debug, Clone)]
pub struct Fields {
    pub rho: Vec<f64>,
    pub v: [Vec<f64>; 3],
    pub s: Vec<f64>,
}

impl Fields {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            rho: grid.alloc(),
            v: [grid.alloc(), grid.alloc(), grid.alloc()],
            s: grid.alloc(),
        }
    }

    /// Quiet background: ρ̃ = s = 0, v = (bulk_v1, 0, 0).
    pub fn background(grid: &Grid, bulk_v1: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.v[0].fill(bulk_v1);
        f
    }

    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    /// Wave array (ℛ₊, ℛ₋, v², v³, s).
    pub fn wave_array(&self, eos: &EquationOfState) -> Result<[Vec<f64>; 5]> {
        let n = self.cells();
        let mut rp = vec![0.0; n];
        let mut rm = vec![0.0; n];
        for i in 0..n {
            let f = eos.big_f(self.rho[i], self.s[i])?;
            rp[i] = self.v[0][i] + f;
            rm[i] = self.v[0][i] - f;
        }
        Ok([rp, rm, self.v[1].clone(), self.v[2].clone(), self.s.clone()])
    }

    /// Rebuild primitives from a wave array (inverts F at fixed entropy).
    pub fn from_wave_array(eos: &EquationOfState, waves: &[Vec<f64>; 5]) -> Result<Self> {
        let n = waves[0].len();
        let mut rho = vec![0.0; n];
        let mut v1 = vec![0.0; n];
        for i in 0..n {
            let f = 0.5 * (waves[0][i] - waves[1][i]);
            rho[i] = eos.invert_f(f, waves[4][i])?;
            v1[i] = 0.5 * (waves[0][i] + waves[1][i]);
        }
        Ok(Self {
            rho,
            v: [v1, waves[2].clone(), waves[3].clone()],
            s: waves[4].clone(),
        })
    }

    /// Renormalized vorticity Ω = e^{−ρ̃} curl v.
    pub fn omega(&self, grid: &Grid) -> [Vec<f64>; 3] {
        let mut w = grid.curl([&self.v[0], &self.v[1], &self.v[2]]);
        for comp in w.iter_mut() {
            for (o, &r) in comp.iter_mut().zip(self.rho.iter()) {
                *o *= (-r).exp();
            }
        }
        w
    }

    /// Entropy gradient S = ∇s.
    pub fn entropy_grad(&self, grid: &Grid) -> [Vec<f64>; 3] {
        grid.grad(&self.s)
    }

    /// Modified vorticity current
    /// 𝒞ⁱ = e^{−ρ̃}(curl Ω)ⁱ + e^{−3ρ̃}c⁻²p_;s [Sᵃ∂ₐvⁱ − (div v)Sⁱ].
    pub fn curl_c(&self, grid: &Grid, eos: &EquationOfState) -> [Vec<f64>; 3] {
        let omega = self.omega(grid);
        let curl_omega = grid.curl([&omega[0], &omega[1], &omega[2]]);
        let s_grad = self.entropy_grad(grid);
        let div_v = grid.div([&self.v[0], &self.v[1], &self.v[2]]);
        let grad_v: [[Vec<f64>; 3]; 3] = [
            grid.grad(&self.v[0]),
            grid.grad(&self.v[1]),
            grid.grad(&self.v[2]),
        ];
        let n = self.cells();
        let mut c_field = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for idx in 0..n {
            let rho = self.rho[idx];
            let c = eos.c(rho, self.s[idx]);
            let coeff = (-3.0 * rho).exp() / (c * c) * eos.p_s(rho, self.s[idx]);
            let e_m = (-rho).exp();
            for i in 0..3 {
                // Sᵃ∂ₐvⁱ — note grad_v[i][a] = ∂ₐvⁱ.
                let mut s_dot_grad_vi = 0.0;
                for a in 0..3 {
                    s_dot_grad_vi += s_grad[a][idx] * grad_v[i][a][idx];
                }
                c_field[i][idx] = e_m * curl_omega[i][idx]
                    + coeff * (s_dot_grad_vi - div_v[idx] * s_grad[i][idx]);
            }
        }
        c_field
    }

    /// Modified entropy divergence 𝒟 = e^{−2ρ̃}(div S − Sᵃ∂ₐρ̃).
    pub fn div_d(&self, grid: &Grid) -> Vec<f64> {
        let s_grad = self.entropy_grad(grid);
        let div_s = grid.div([&s_grad[0], &s_grad[1], &s_grad[2]]);
        let grad_rho = grid.grad(&self.rho);
        let n = self.cells();
        let mut d = vec![0.0; n];
        for idx in 0..n {
            let mut s_dot_grad_rho = 0.0;
            for a in 0..3 {
                s_dot_grad_rho += s_grad[a][idx] * grad_rho[a][idx];
            }
            d[idx] = (-2.0 * self.rho[idx]).exp() * (div_s[idx] - s_dot_grad_rho);
        }
        d
    }

    /// Sound speed at every cell.
    pub fn sound_speed(&self, eos: &EquationOfState) -> Vec<f64> {
        self.rho
            .iter()
            .zip(self.s.iter())
            .map(|(&r, &s)| eos.c(r, s))
            .collect()
    }

    /// Largest deviation from the given background outside the slab
    /// x¹ ∈ [support_min, support_max] — the compact-support check.
    pub fn background_deviation_outside(
        &self,
        grid: &Grid,
        bulk_v1: f64,
        support_min: f64,
        support_max: f64,
    ) -> f64 {
        let slab = grid.n2 * grid.n3;
        let mut worst = 0.0_f64;
        for i1 in 0..grid.n1 {
            let x1 = grid.x1(i1);
            if x1 >= support_min && x1 <= support_max {
                continue;
            }
            for j in 0..slab {
                let idx = i1 * slab + j;
                worst = worst
                    .max(self.rho[idx].abs())
                    .max((self.v[0][idx] - bulk_v1).abs())
                    .max(self.v[1][idx].abs())
                    .max(self.v[2][idx].abs())
                    .max(self.s[idx].abs());
            }
        }
        worst
    }
}

/// Max-abs over a 3-vector of fields, per the fixed-tree reduction.
pub fn vector_max_abs(v: &[Vec<f64>; 3]) -> f64 {
    v.iter()
        .map(|c| kernel::det_max_abs(c))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_array_round_trips_to_primitives() {
        let grid = Grid::new(32, 1, 1, -1.0, 1.0, 4).unwrap();
        let eos = EquationOfState::polytropic(1.4).unwrap();
        let mut f = Fields::background(&grid, 0.0);
        for i1 in 0..grid.n1 {
            let x = grid.x1(i1);
            f.rho[i1] = 0.3 * (2.0 * x).sin();
            f.v[0][i1] = 0.2 * x.cos();
            f.v[1][i1] = 0.05 * x;
            f.s[i1] = 0.4 * (x * 1.3).cos();
        }
        let waves = f.wave_array(&eos).unwrap();
        let back = Fields::from_wave_array(&eos, &waves).unwrap();
        for i in 0..grid.cells() {
            assert!((back.rho[i] - f.rho[i]).abs() < 1e-10);
            assert!((back.v[0][i] - f.v[0][i]).abs() < 1e-10);
            assert_eq!(back.v[1][i], f.v[1][i]);
            assert_eq!(back.s[i], f.s[i]);
        }
    }

    #[test]
    fn derived_fields_vanish_on_irrotational_isentropic_states() {
        let grid = Grid::new(24, 12, 12, -1.0, 1.0, 2).unwrap();
        let eos = EquationOfState::polytropic(2.0).unwrap();
        let mut f = Fields::background(&grid, 0.0);
        // Gradient flow: v = ∇φ has zero curl; s uniform has zero S and 𝒟.
        let phi = grid.sample(|x1, x2, x3| {
            0.1 * (1.1 * x1).sin()
                + 0.02 * (2.0 * std::f64::consts::PI * x2).cos()
                + 0.02 * (2.0 * std::f64::consts::PI * x3).sin()
        });
        let gphi = grid.grad(&phi);
        f.v = gphi;
        f.rho = grid.sample(|x1, _, _| 0.05 * (0.9 * x1).cos());

        let omega = f.omega(&grid);
        assert!(vector_max_abs(&omega) < 1e-9, "gradient flow has vorticity");
        let d = f.div_d(&grid);
        assert!(kernel::det_max_abs(&d) == 0.0, "uniform entropy has nonzero D");
        let c = f.curl_c(&grid, &eos);
        assert!(vector_max_abs(&c) < 1e-8, "C not small: {}", vector_max_abs(&c));
    }
}
