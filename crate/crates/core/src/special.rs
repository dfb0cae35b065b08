//! Log-gamma, log-factorials and the small numerical kernels shared by the
//! posterior engine: compensated summation, log-sum-exp and Gauss-Legendre
//! quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

const LN_FACTORIAL_TABLE_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64; LN_FACTORIAL_TABLE_LEN] {
    static TABLE: OnceLock<[f64; LN_FACTORIAL_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; LN_FACTORIAL_TABLE_LEN];
        let mut acc = NeumaierSum::default();
        for (n, slot) in table.iter_mut().enumerate().skip(1) {
            acc.add((n as f64).ln());
            *slot = acc.value();
        }
        table
    })
}

/// `ln(n!)`; exact cumulative log-sums below 1024, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACTORIAL_TABLE_LEN {
        ln_factorial_table()[n as usize]
    } else {
        stirling_ln_gamma(n as f64 + 1.0)
    }
}

// B_{2k} / (2k (2k-1)) for k = 1..8
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const STIRLING_MIN_ARG: f64 = 15.0;

fn stirling_ln_gamma(z: f64) -> f64 {
    debug_assert!(z >= STIRLING_MIN_ARG);
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        series = series * inv2 + c;
    }
    series *= inv;
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

/// Natural log of the gamma function for `x > 0`.
///
/// Integer arguments below the table size are looked up exactly; other
/// arguments are shifted up to at least 15 with the recurrence and
/// evaluated with an 8-term Stirling series (truncation error < 1e-20).
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    if x.fract() == 0.0 && x <= LN_FACTORIAL_TABLE_LEN as f64 {
        return ln_factorial_table()[x as usize - 1];
    }
    if x >= STIRLING_MIN_ARG {
        return stirling_ln_gamma(x);
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < STIRLING_MIN_ARG {
        prod *= z;
        z += 1.0;
    }
    stirling_ln_gamma(z) - prod.ln()
}

/// Neumaier's variant of Kahan compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `ln(sum(exp(xs)))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: NeumaierSum = xs.iter().map(|&x| (x - m).exp()).collect();
    m + s.value().ln()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_small_integers_are_log_sums() {
        let mut acc = 0.0f64;
        for n in 1..200u64 {
            acc += (n as f64).ln();
            assert!((ln_factorial(n) - acc).abs() <= 1e-12 * acc.max(1.0));
        }
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
        assert_eq!(ln_gamma(1.0), 0.0);
        assert_eq!(ln_gamma(2.0), 0.0);
    }

    #[test]
    fn ln_factorial_table_and_stirling_agree_at_the_seam() {
        let n = LN_FACTORIAL_TABLE_LEN as u64 - 1;
        let table = ln_factorial(n);
        let stirling = stirling_ln_gamma(n as f64 + 1.0);
        assert!(((table - stirling) / table).abs() < 1e-14);
        assert!(((ln_factorial(n + 1) - table) - ((n + 1) as f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn ln_gamma_known_values() {
        let half = ln_gamma(0.5);
        assert!((half - 0.5 * PI.ln()).abs() < 1e-14);
        // Gamma(3/2) = sqrt(pi)/2
        assert!((ln_gamma(1.5) - (0.5 * PI.ln() - 2f64.ln())).abs() < 1e-14);
        // Gamma(1/3) = 2.678938534707747633...
        assert!((ln_gamma(1.0 / 3.0) - 2.678_938_534_707_747_6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_matches_statrs_relative() {
        for i in 0..2000 {
            let x = 1.0 + i as f64 * 0.731 + 0.0123;
            let ours = ln_gamma(x);
            let theirs = statrs::function::gamma::ln_gamma(x);
            let scale = theirs.abs().max(1.0);
            assert!((ours - theirs).abs() <= 1e-13 * scale, "x={x} {ours} {theirs}");
        }
    }

    #[test]
    fn ln_gamma_recurrence() {
        for i in 1..500 {
            let x = i as f64 * 0.137;
            let lhs = ln_gamma(x + 1.0) - ln_gamma(x);
            assert!((lhs - x.ln()).abs() < 1e-12 * (1.0 + x.ln().abs()), "x={x}");
        }
    }

    #[test]
    fn log_sum_exp_basics() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-1.0, -2.0) - log_sum_exp(&[-1.0, -2.0])).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut s = NeumaierSum::default();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-17);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-14).abs() < 1e-20);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 38 monomial: integral over [-1, 1] is 2/39
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!(odd.abs() < 1e-15);
    }
}
