//! Halton points for deterministic space-filling samples.

/// First `n` primes, used as Halton bases.
fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

/// Iterator over points of the Halton sequence in `[0, 1)^dim`.
///
/// Index 0 (the origin) is skipped; an `offset` selects a disjoint
/// stretch of the sequence so that independent callers do not reuse points.
pub(crate) struct Halton {
    bases: Vec<u64>,
    index: u64,
}

impl Halton {
    pub(crate) fn new(dim: usize, offset: u64) -> Self {
        Self { bases: primes(dim), index: offset + 1 }
    }

    pub(crate) fn next_into(&mut self, out: &mut [f64]) {
        for (o, &b) in out.iter_mut().zip(&self.bases) {
            *o = radical_inverse(self.index, b);
        }
        self.index += 1;
    }
}

/// Maps a unit-cube point into the box `[lo, hi]`.
pub(crate) fn scale_into(unit: &[f64], lo: &[f64], hi: &[f64], out: &mut [f64]) {
    for i in 0..unit.len() {
        out[i] = lo[i] + unit[i] * (hi[i] - lo[i]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_primes() {
        assert_eq!(primes(6), vec![2, 3, 5, 7, 11, 13]);
    }

    #[test]
    fn van_der_corput() {
        let mut h = Halton::new(1, 0);
        let mut x = [0.0];
        let expected = [0.5, 0.25, 0.75, 0.125];
        for e in expected {
            h.next_into(&mut x);
            assert_eq!(x[0], e);
        }
    }
}
