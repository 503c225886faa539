//! Compensated (Neumaier) summation. All reductions in the crate go through
//! these so that results are deterministic for a fixed summation order.

use num_complex::Complex64;

/// Neumaier variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of reals.
pub fn sum_f64<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated complex accumulator (real and imaginary parts independently).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAccumulator {
    re: Accumulator,
    im: Accumulator,
}

impl ComplexAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated sum of an iterator of complex values.
pub fn sum_c64<I: IntoIterator<Item = Complex64>>(zs: I) -> Complex64 {
    let mut acc = ComplexAccumulator::new();
    for z in zs {
        acc.add(z);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_beats_naive_on_cancellation() {
        // 1 + 1e100 + 1 - 1e100 = 2; naive summation returns 0.
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum_f64(xs), 2.0);
    }

    #[test]
    fn complex_sum_matches_componentwise() {
        let zs: Vec<Complex64> = (0..1000)
            .map(|i| Complex64::new(1.0 / (i + 1) as f64, -0.5 / (i + 1) as f64))
            .collect();
        let s = sum_c64(zs.iter().copied());
        let re = sum_f64(zs.iter().map(|z| z.re));
        let im = sum_f64(zs.iter().map(|z| z.im));
        assert_eq!(s.re, re);
        assert_eq!(s.im, im);
    }
}
