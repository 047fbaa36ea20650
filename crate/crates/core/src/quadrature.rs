//! Fixed Gauss-Legendre rules used for cell averages of analytic profiles.

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];

const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Five-point Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Gauss quadrature over `[a, b]` split at every breakpoint inside the
/// interval, with `pieces` equal sub-intervals per smooth piece.
pub fn gauss5_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    pieces: usize,
) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let pieces = pieces.max(1);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let h = (seg[1] - seg[0]) / pieces as f64;
        for k in 0..pieces {
            let lo = seg[0] + h * k as f64;
            total += gauss5(f, lo, lo + h);
        }
    }
    total
}
