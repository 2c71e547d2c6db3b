//! Gauss–Legendre rules and composite integration helpers.

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + width * k as f64;
                self.integrate(lo, lo + width, &mut f)
            })
            .sum()
    }
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(samples: &[f64], spacing: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => spacing * (samples.iter().sum::<f64>() - 0.5 * (samples[0] + samples[n - 1])),
    }
}

/// Orthonormal Legendre polynomial `sqrt((2l+1)/2) P_l(x)` on `[-1, 1]`.
pub fn legendre_normalized(l: u32, x: f64) -> f64 {
    let (p, _) = legendre_with_derivative(l as usize, x);
    ((2.0 * f64::from(l) + 1.0) / 2.0).sqrt() * p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for k in 0..12 {
            let got = gl.integrate(0.0, 1.0, |x| x.powi(k));
            let expect = 1.0 / f64::from(k + 1);
            assert!((got - expect).abs() < 1e-14, "x^{k}: {got}");
        }
    }

    #[test]
    fn composite_gaussian() {
        let gl = GaussLegendre::new(16);
        let got = gl.integrate_composite(-20.0, 20.0, 40, |x| (-x * x).exp());
        assert!((got - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs: Vec<f64> = (0..11).map(|k| 3.0 + 0.5 * f64::from(k)).collect();
        assert!((trapezoid(&xs, 0.1) - 5.5).abs() < 1e-14);
    }

    #[test]
    fn legendre_orthonormal() {
        let gl = GaussLegendre::new(40);
        for l in 0..6 {
            for k in 0..6 {
                let ip = gl.integrate(-1.0, 1.0, |x| {
                    legendre_normalized(l, x) * legendre_normalized(k, x)
                });
                let expect = if l == k { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-13, "({l},{k}): {ip}");
            }
        }
    }
}
