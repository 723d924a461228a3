//! 3D compressible Euler evolution in (ρ̃, v, s) variables.
