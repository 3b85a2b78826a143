//! Label-transition features and their compact slot encoding.
//!
//! For a fixed complex-side size `n` the feature vector of a transition takes
//! only `3n + 1` distinct values, so transition scores and their gradients
//! are computed once per slot rather than once per label pair.

/// `[g1, g2, g3, g4]`: label distance, "became unaligned", "became aligned",
/// "stayed unaligned".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionFeatures {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl TransitionFeatures {
    pub fn as_array(&self) -> [f64; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Features of `a_prev -> a_i`; label 0 is "unaligned" and takes part in
/// `g1` literally.
pub fn transition_features(a_i: usize, a_prev: usize) -> TransitionFeatures {
    TransitionFeatures {
        g1: a_i.abs_diff(a_prev) as f64,
        g2: indicator(a_i == 0 && a_prev != 0),
        g3: indicator(a_i != 0 && a_prev == 0),
        g4: indicator(a_i == 0 && a_prev == 0),
    }
}

/// Features of the transition from the virtual start label into `a_1`.
pub fn start_features(a_1: usize) -> TransitionFeatures {
    TransitionFeatures {
        g1: 0.0,
        g2: 0.0,
        g3: 0.0,
        g4: indicator(a_1 == 0),
    }
}

/// Slot layout for complex size `n`:
/// `[0, n)` aligned-to-aligned with gap `d`; `[n, 2n)` aligned `d` to null;
/// `[2n, 3n)` null to aligned `d`; `3n` null to null.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Slots {
    n: usize,
}

impl Slots {
    pub fn new(n: usize) -> Self {
        Slots { n }
    }

    pub fn len(&self) -> usize {
        3 * self.n + 1
    }

    #[inline]
    pub fn transition(&self, a_i: usize, a_prev: usize) -> usize {
        match (a_i, a_prev) {
            (0, 0) => 3 * self.n,
            (0, d) => self.n + d - 1,
            (d, 0) => 2 * self.n + d - 1,
            (a, b) => a.abs_diff(b),
        }
    }

    #[inline]
    pub fn start(&self, a_1: usize) -> usize {
        if a_1 == 0 {
            3 * self.n
        } else {
            0
        }
    }

    pub fn features(&self, slot: usize) -> [f64; 4] {
        let n = self.n;
        if slot == 3 * n {
            [0.0, 0.0, 0.0, 1.0]
        } else if slot >= 2 * n {
            [(slot - 2 * n + 1) as f64, 0.0, 1.0, 0.0]
        } else if slot >= n {
            [(slot - n + 1) as f64, 1.0, 0.0, 0.0]
        } else {
            [slot as f64, 0.0, 0.0, 0.0]
        }
    }
}
