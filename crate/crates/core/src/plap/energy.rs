use crate::grid::{Region, ScalarField};

/// Midpoint rule for `∫ |∇u|^p` over the cells of `domain`, with the
/// centred-difference gradient of [`crate::grid::gradient`].
pub fn p_energy(u: &ScalarField, p: f64, domain: &Region) -> f64 {
    let g = u.grid();
    let h = g.spacing();
    domain
        .mask()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(idx, _)| {
            let (i, j) = g.ij(idx);
            let d = g.node_gradient(u.values(), i, j);
            (d[0] * d[0] + d[1] * d[1]).powf(0.5 * p)
        })
        .sum::<f64>()
        * h
        * h
}
