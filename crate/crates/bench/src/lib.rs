//! Inputs shared by the benchmarks in `benches/`.

use unichar_core::patterns::encode_pattern;
use unichar_core::{AlgebraicData, ParamPoly, ParameterSystem, Poset};

/// Algebraic data of the strictly upper triangular `n x n` matrices.
pub fn unitriangular_data(n: usize) -> AlgebraicData {
    encode_pattern(&Poset::chain(n))
}

/// `x_1 y_1 + ... + x_k y_k = 1` with all `x_i` nonzero: a system that needs
/// case splits rather than a single elimination.
pub fn bilinear_system(k: usize) -> ParameterSystem {
    let mut s = ParameterSystem::new();
    let mut lhs = ParamPoly::constant(-1);
    for i in 0..k {
        let x = s.add_param(&format!("x{i}"));
        let y = s.add_param(&format!("y{i}"));
        s.add_nonzero(x);
        lhs = &lhs + &(&ParamPoly::var(x) * &ParamPoly::var(y));
    }
    s.add_equation(lhs);
    s
}
