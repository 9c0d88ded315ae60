//! Summed-area tables over binary masks.

/// Inclusive-exclusive 2-D prefix sums: `s[(y, x)]` is the number of set
/// cells in `[0, x) x [0, y)`.
#[derive(Debug, Clone)]
pub struct SummedAreaTable {
    width: usize,
    height: usize,
    s: Vec<u64>,
}

impl SummedAreaTable {
    pub fn from_mask(width: usize, height: usize, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width * height);
        let stride = width + 1;
        let mut s = vec![0u64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0u64;
            for x in 0..width {
                row += bits[y * width + x] as u64;
                s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + row;
            }
        }
        SummedAreaTable { width, height, s }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Set cells in `[x0, x1) x [y0, y1)`.
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let st = self.width + 1;
        self.s[y1 * st + x1] + self.s[y0 * st + x0] - self.s[y0 * st + x1] - self.s[y1 * st + x0]
    }

    pub fn total(&self) -> u64 {
        self.sum(0, 0, self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(
            bits in proptest::collection::vec(any::<bool>(), 7 * 5),
            x0 in 0usize..7, x1 in 0usize..8, y0 in 0usize..5, y1 in 0usize..6,
        ) {
            let sat = SummedAreaTable::from_mask(7, 5, &bits);
            let (x0, x1) = (x0.min(x1), x0.max(x1));
            let (y0, y1) = (y0.min(y1), y0.max(y1));
            let brute = (y0..y1)
                .flat_map(|y| (x0..x1).map(move |x| (x, y)))
                .filter(|&(x, y)| bits[y * 7 + x])
                .count() as u64;
            prop_assert_eq!(sat.sum(x0, y0, x1, y1), brute);
        }
    }
}
