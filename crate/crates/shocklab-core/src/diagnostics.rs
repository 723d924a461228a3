//! Run diagnostics: norms, blowup correlations, Hölder seminorms, energies.
