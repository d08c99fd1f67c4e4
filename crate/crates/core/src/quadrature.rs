//! Gauss–Legendre quadrature: 1D rules and tensor products over boxes.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre polynomial with the
/// Chebyshev-like initial guess; accurate to machine precision for the node
/// counts used here (n <= a few hundred).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// An `n`-point rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nodes = xs.iter().map(|x| mid + half * x).collect();
    let weights = ws.iter().map(|w| w * half).collect();
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with an `n`-point rule.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre_on(n, a, b);
    xs.iter().zip(&ws).map(|(x, w)| w * f(*x)).sum()
}

/// Odometer over a multi-dimensional index space; yields indices in
/// row-major order so tensor-product sums have a fixed, deterministic order.
pub fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Tensor-product Gauss–Legendre integral of `f` over the box
/// `lo[d]..hi[d]`, `n` nodes per dimension.
pub fn integrate_box(f: impl Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize) -> f64 {
    assert_eq!(lo.len(), hi.len());
    let dim = lo.len();
    let rules: Vec<_> = (0..dim)
        .map(|d| gauss_legendre_on(n, lo[d], hi[d]))
        .collect();
    let mut sum = 0.0;
    let mut point = vec![0.0; dim];
    for idx in multi_indices(&vec![n; dim]) {
        let mut w = 1.0;
        for d in 0..dim {
            point[d] = rules[d].0[idx[d]];
            w *= rules[d].1[idx[d]];
        }
        sum += w * f(&point);
    }
    sum
}
