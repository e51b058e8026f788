//! Quasi-Newton local search with numerical gradients, plus the seeded PRNG
//! used for restart initialization.

/// SplitMix64 generator; tiny, seedable and identical on every platform.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Mixes a base seed with a stream index so independent restarts get
/// decorrelated but reproducible generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = SplitMix64::new(seed ^ stream.wrapping_mul(0xd1342543de82ef95));
    rng.next_u64()
}

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    pub gradient_step: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximizes `f` from `x0` with BFGS on central-difference gradients.
pub fn maximize<F: Fn(&[f64]) -> f64>(f: F, x0: Vec<f64>, opts: &BfgsOptions) -> BfgsOutcome {
    let n = x0.len();
    let phi = |x: &[f64]| -f(x);
    let grad = |x: &mut Vec<f64>| -> Vec<f64> {
        let h = opts.gradient_step;
        let mut g = vec![0.0; n];
        for i in 0..n {
            let saved = x[i];
            x[i] = saved + h;
            let fp = phi(x);
            x[i] = saved - h;
            let fm = phi(x);
            x[i] = saved;
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    };

    let mut x = x0;
    let mut fx = phi(&x);
    if !fx.is_finite() {
        return BfgsOutcome {
            value: -fx,
            x,
            converged: false,
            iterations: 0,
        };
    }
    let mut g = grad(&mut x);
    // Dense inverse-Hessian approximation.
    let mut hmat = identity(n);
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iterations {
        iterations = it + 1;
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < opts.tolerance {
            converged = true;
            break;
        }

        let mut d = mat_vec_neg(&hmat, &g);
        let mut dd: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if dd >= 0.0 || !dd.is_finite() {
            hmat = identity(n);
            d = g.iter().map(|v| -v).collect();
            dd = -g.iter().map(|v| v * v).sum::<f64>();
        }

        // Backtracking Armijo line search.
        let mut step = 1.0f64;
        let mut accepted = None;
        for _ in 0..45 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let fnew = phi(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * dd {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let (xn, fnew) = match accepted {
            Some(v) => v,
            None => {
                converged = true;
                break;
            }
        };

        let mut xn = xn;
        let gn = grad(&mut xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let s_norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-12 * s_norm * y_norm && sy.is_finite() {
            bfgs_update(&mut hmat, &s, &y, sy);
        } else {
            hmat = identity(n);
        }

        if (fx - fnew).abs() < opts.tolerance * (1.0 + fx.abs()) && it > 2 {
            x = xn;
            fx = fnew;
            converged = true;
            break;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }

    BfgsOutcome {
        value: -fx,
        x,
        converged,
        iterations,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec_neg(h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    h.chunks_exact(n)
        .map(|row| -row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T with rho = 1/(s.y).
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    // hy = H y, yhy = y^T H y
    let mut hy = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += h[i * n + j] * y[j];
        }
        hy[i] = acc;
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                + rho * rho * yhy * s[i] * s[j]
                + rho * s[i] * s[j];
        }
    }
}
