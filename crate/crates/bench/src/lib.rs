//! Fixed operators used by the benchmarks.

use std::f64::consts::PI;

use seqlocc_core::linalg::{diag_phases, from_real_rows, swap_operator, BipartiteUnitary, CMatrix};

pub fn two_qubit(m: CMatrix) -> BipartiteUnitary {
    BipartiteUnitary::new(m, 2, 2).expect("fixture is unitary")
}

pub fn cnot() -> BipartiteUnitary {
    two_qubit(from_real_rows(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]))
}

pub fn cz() -> BipartiteUnitary {
    two_qubit(diag_phases(&[0.0, 0.0, 0.0, PI]))
}

pub fn swap() -> BipartiteUnitary {
    two_qubit(swap_operator(2))
}
