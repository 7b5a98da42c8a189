/// Lagrange basis weights for evaluating the interpolant through `nodes` at `x`.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (x - xj) / (xi - xj))
                .product()
        })
        .collect()
}

/// Start index of a `width`-point stencil on a uniform grid `x0 + k*step`, `k < len`,
/// roughly centred on `x` and clamped to the grid.
pub fn stencil_start(x0: f64, step: f64, len: usize, width: usize, x: f64) -> usize {
    let cell = ((x - x0) / step).floor() as isize;
    let start = cell - (width as isize - 1) / 2;
    start.clamp(0, len.saturating_sub(width) as isize) as usize
}

/// Weights `w_j` with `Σ w_j f(x_j) ≈ f'(x_i)` for the interpolant through `nodes`,
/// evaluated at the node `x_i`.
pub fn derivative_weights_at_node(nodes: &[f64], i: usize) -> Vec<f64> {
    let a = |k: usize| -> f64 {
        nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &xj)| nodes[k] - xj)
            .product()
    };
    let ai = a(i);
    (0..nodes.len())
        .map(|j| {
            if j == i {
                nodes
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i)
                    .map(|(_, &xk)| 1.0 / (nodes[i] - xk))
                    .sum()
            } else {
                ai / a(j) / (nodes[i] - nodes[j])
            }
        })
        .collect()
}
