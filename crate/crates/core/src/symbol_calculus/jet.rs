//! Truncated univariate Taylor series, used for derivatives of the smooth step.

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(c: f64, n: usize) -> Self {
        let mut v = vec![0.0; n + 1];
        v[0] = c;
        Jet(v)
    }

    /// The variable itself at `x0`.
    pub fn variable(x0: f64, n: usize) -> Self {
        let mut j = Self::constant(x0, n);
        if n > 0 {
            j.0[1] = 1.0;
        }
        j
    }

    fn n(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(out)
    }

    pub fn recip(&self) -> Jet {
        let n = self.n();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / self.0[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.0[j] * out[k - j]).sum();
            out[k] = -s / self.0[0];
        }
        Jet(out)
    }

    pub fn div(&self, o: &Jet) -> Jet {
        self.mul(&o.recip())
    }

    /// exp via the recurrence k·e_k = Σ_{j=1..k} j·g_j·e_{k−j}.
    pub fn exp(&self) -> Jet {
        let n = self.n();
        let mut out = vec![0.0; n];
        out[0] = self.0[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.0[j] * out[k - j]).sum();
            out[k] = s / k as f64;
        }
        Jet(out)
    }

    /// k-th derivative from the k-th Taylor coefficient.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.0[k] * fact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_reciprocal_matches_closed_form() {
        // f(u) = exp(−1/u); f'(u) = f/u², f''(u) = f(1 − 2u)/u⁴
        let u0 = 0.4;
        let j = Jet::variable(u0, 3).recip().scale(-1.0).exp();
        let f = (-1.0 / u0).exp();
        assert!((j.derivative(0) - f).abs() < 1e-15);
        assert!((j.derivative(1) - f / (u0 * u0)).abs() < 1e-13);
        assert!((j.derivative(2) - f * (1.0 - 2.0 * u0) / u0.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn division_round_trip() {
        let a = Jet(vec![2.0, 1.0, -0.5, 0.25]);
        let b = Jet(vec![1.5, -2.0, 0.3, 0.7]);
        let back = a.div(&b).mul(&b);
        for (x, y) in back.0.iter().zip(&a.0) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
