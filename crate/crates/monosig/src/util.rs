//! Small numeric helpers shared across modules.

/// Neumaier's compensated accumulator. Running sums of signature levels and
/// rate integrals must not lose mass to cancellation; plain `f64` addition
/// is fine for the per-entry convolution work, but totals go through this.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

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

pub fn compensated_total(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// n! as f64, exact through 20! (which still fits in the 64-bit mantissa range
/// of consecutive integers only up to 2^53; above that the nearest double is
/// taken, which is all the callers need).
pub fn factorial(n: usize) -> f64 {
    let mut f = 1.0;
    for k in 2..=n {
        f *= k as f64;
    }
    f
}

/// Number of compositions of `total` into `parts` non-negative parts:
/// C(total + parts - 1, parts - 1). Callers keep `total` and `parts` small
/// enough that the binomial fits comfortably in u128.
pub fn composition_count(total: usize, parts: usize) -> usize {
    debug_assert!(parts >= 1);
    let n = (total + parts - 1) as u128;
    let k = (parts - 1) as u128;
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_mass() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e-16);
        s.add(1e-16);
        s.add(-1.0);
        assert_eq!(s.value(), 2e-16);
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(factorial(10), 3_628_800.0);
    }

    #[test]
    fn composition_counts() {
        assert_eq!(composition_count(0, 1), 1);
        assert_eq!(composition_count(7, 1), 1);
        assert_eq!(composition_count(3, 2), 4);
        assert_eq!(composition_count(4, 3), 15);
    }
}
