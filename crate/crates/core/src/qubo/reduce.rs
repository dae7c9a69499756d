use super::encode::{CubicTerm, Terms};
use super::index::VarIndex;

/// `3z + x1 x2 - 2 x1 z - 2 x2 z`: zero when `z = x1 x2`, one or three otherwise.
pub fn rosenberg_h(x1: bool, x2: bool, z: bool) -> u8 {
    let (x1, x2, z) = (x1 as i8, x2 as i8, z as i8);
    (3 * z + x1 * x2 - 2 * x1 * z - 2 * x2 * z) as u8
}

/// Adds `p h(x[a], x[b], x[z])`.
pub fn emit_rosenberg(terms: &mut Terms, a: usize, b: usize, z: usize, p: f64) {
    terms.add_linear(z, 3.0 * p);
    terms.add_quadratic(a, b, p);
    terms.add_quadratic(a, z, -2.0 * p);
    terms.add_quadratic(b, z, -2.0 * p);
}

/// Replaces each `c x[a] x[b] x[c]` by `c z x[c]` with `z` standing for
/// `x[a] x[b]`, allocated in `index` and shared between terms. Returns the
/// substituted quadratic terms and the Rosenberg gadgets separately.
pub fn reduce_to_qubo(cubic: &[CubicTerm], index: &mut VarIndex, p_qubic: f64) -> (Terms, Terms) {
    let mut residual = Terms::default();
    let mut gadgets = Terms::default();
    for t in cubic {
        let (z, fresh) = index.intern_aux(t.a, t.b);
        if fresh {
            emit_rosenberg(&mut gadgets, t.a.min(t.b), t.a.max(t.b), z, p_qubic);
        }
        residual.add_quadratic(z, t.c, t.coeff);
    }
    (residual, gadgets)
}
