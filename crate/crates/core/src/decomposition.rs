//! Sharp Fourier cuts: the genuinely three-dimensional part `w_N = Q_N u`,
//! its complement `v_N = P_N u`, and the split `v_N = v1 + v2 + v3`.

use crate::field::SpectralField;

/// Which piece of the partition a wave vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    /// `|k1| <= N`
    V1,
    /// `|k1| > N`, `|k2| <= N`
    V2,
    /// `|k1|, |k2| > N`, `|k3| <= N`
    V3,
    /// all three `|k_i| > N`
    W,
}

/// Labels wave vectors for a fixed cut level `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModePartition {
    cut_level: u32,
}

impl ModePartition {
    pub fn new(cut_level: u32) -> Self {
        Self { cut_level }
    }

    pub fn cut_level(&self) -> u32 {
        self.cut_level
    }

    pub fn label(&self, k: [i64; 3]) -> ModeLabel {
        let n = self.cut_level as i64;
        if k[0].abs() <= n {
            ModeLabel::V1
        } else if k[1].abs() <= n {
            ModeLabel::V2
        } else if k[2].abs() <= n {
            ModeLabel::V3
        } else {
            ModeLabel::W
        }
    }

    /// Label of every stored mode of `u`'s grid, x-fastest.
    pub fn labels(&self, u: &SpectralField) -> Vec<ModeLabel> {
        let mut out = Vec::with_capacity(u.grid().len());
        u.grid().for_each_mode(|_, k| out.push(self.label(k)));
        out
    }
}

/// True when all three `|k_i|` exceed `n`.
pub fn in_genuine3d_band(k: [i64; 3], n: u32) -> bool {
    let n = n as i64;
    k.iter().all(|&ki| ki.abs() > n)
}

/// `Q_N u`: modes with every `|k_i| > N`.
pub fn genuine3d_cut(u: &SpectralField, n: u32) -> SpectralField {
    u.masked(|k| in_genuine3d_band(k, n))
}

/// `P_N u = u - Q_N u`, built with the complementary mask so the two add
/// back to `u` coefficient for coefficient.
pub fn low_cut(u: &SpectralField, n: u32) -> SpectralField {
    u.masked(|k| !in_genuine3d_band(k, n))
}

/// `(v1, v2, v3)` with supports given by [`ModePartition`].
pub fn v_partition(u: &SpectralField, n: u32) -> (SpectralField, SpectralField, SpectralField) {
    let part = ModePartition::new(n);
    (
        u.masked(|k| part.label(k) == ModeLabel::V1),
        u.masked(|k| part.label(k) == ModeLabel::V2),
        u.masked(|k| part.label(k) == ModeLabel::V3),
    )
}
