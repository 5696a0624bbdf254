//! Four-point Gauss–Legendre rules, exact for polynomials of degree ≤ 7 per axis.

/// Nodes on [−1, 1].
pub const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];

/// Weights matching [`GL4_NODES`].
pub const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// The 4-point rule mapped to the unit interval [0, 1].
pub fn unit_rule() -> ([f64; 4], [f64; 4]) {
    let mut x = [0.0; 4];
    let mut w = [0.0; 4];
    for q in 0..4 {
        x[q] = 0.5 * (GL4_NODES[q] + 1.0);
        w[q] = 0.5 * GL4_WEIGHTS[q];
    }
    (x, w)
}

/// Tensor-product points of the unit rule on [0,1]^dim.
/// Each entry is (reference coordinates, weight); the first axis varies slowest.
pub fn tensor_unit_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = unit_rule();
    let count = 4usize.pow(dim as u32);
    (0..count)
        .map(|mut k| {
            let mut xi = vec![0.0; dim];
            let mut wt = 1.0;
            for axis in (0..dim).rev() {
                let q = k % 4;
                k /= 4;
                xi[axis] = x[q];
                wt *= w[q];
            }
            (xi, wt)
        })
        .collect()
}
