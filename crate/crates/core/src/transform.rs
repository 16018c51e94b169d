//! Physical <-> spectral transforms.
//!
//! Coefficients follow `u(x) = sum_k c^k e^{2 pi i k.x}`, so synthesis is an
//! unnormalized inverse DFT and analysis carries the `1/M^3` factor. Real
//! components are processed two at a time packed as `a + i b`.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{PhysicalField, SpectralField};

/// Relative Hermitian defect accepted by [`inverse_transform`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Fourier coefficients of real samples. The mean mode is zeroed.
pub fn forward_transform(p: &PhysicalField) -> SpectralField {
    let grid = *p.grid();
    let s = p.samples();
    let mut comps = analyze_real(3, grid.modes(), &[&s[0], &s[1], &s[2]]).into_iter();
    let comps = [
        comps.next().unwrap(),
        comps.next().unwrap(),
        comps.next().unwrap(),
    ];
    SpectralField::from_components(grid, comps).expect("sizes match by construction")
}

/// Physical samples of a Hermitian-symmetric field.
pub fn inverse_transform(s: &SpectralField) -> Result<PhysicalField> {
    let defect = s.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * s.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(inverse_unchecked(s))
}

pub(crate) fn inverse_unchecked(s: &SpectralField) -> PhysicalField {
    let grid = *s.grid();
    let c = s.components();
    let mut out = synthesize(3, grid.modes(), &[&c[0], &c[1], &c[2]], grid.modes()).into_iter();
    let samples = [
        out.next().unwrap(),
        out.next().unwrap(),
        out.next().unwrap(),
    ];
    PhysicalField::new(grid, samples).expect("sizes match by construction")
}

/// Samples on an oversampled `len^ndim` grid of real fields given by their
/// coefficients on the `m^ndim` box. The coefficient sets must be Hermitian.
///
/// Nyquist coefficients are split evenly between `+m/2` and `-m/2` when
/// `len > m`, which yields the real trigonometric interpolant.
pub(crate) fn synthesize(
    ndim: usize,
    m: usize,
    comps: &[&[Complex64]],
    len: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        with_padded_inverse(ndim, m, pair, len, |buf| {
            out.push(buf.iter().map(|z| z.re).collect());
            if pair.len() == 2 {
                out.push(buf.iter().map(|z| z.im).collect());
            }
        });
    }
    out
}

/// Reduces `g(sum_j f_j(x)^2)` over the `len^ndim` grid, same conventions
/// as [`synthesize`]. Returns `(sum g, max sum_j f_j^2)`.
pub(crate) fn reduce_magnitude_sq(
    ndim: usize,
    m: usize,
    comps: &[&[Complex64]],
    len: usize,
    g: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let grouped: Vec<(usize, &[Complex64])> = comps.iter().map(|&c| (0, c)).collect();
    reduce_magnitude_sq_groups(ndim, m, &grouped, 1, len, g)[0]
}

/// [`reduce_magnitude_sq`] for several fields at once: component `(j, c)`
/// belongs to field `j < groups`. Components of different fields share
/// transforms, two reals per complex transform.
pub(crate) fn reduce_magnitude_sq_groups(
    ndim: usize,
    m: usize,
    comps: &[(usize, &[Complex64])],
    groups: usize,
    len: usize,
    g: impl Fn(f64) -> f64,
) -> Vec<(f64, f64)> {
    thread_local! {
        static BUFS: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
    }
    assert!(len >= m && len % 2 == 0 && (2..=3).contains(&ndim));
    const LANES: usize = 8;
    let zero = Complex64::default();
    let total = len.pow(ndim as u32);
    let live: Vec<(usize, &[Complex64])> = comps
        .iter()
        .copied()
        .filter(|(_, c)| c.iter().any(|z| *z != zero))
        .collect();
    if live.is_empty() {
        return vec![(total as f64 * g(0.0), 0.0); groups];
    }
    let targets = axis_targets(m, len);
    let sources: Vec<&[Complex64]> = live.iter().map(|&(_, c)| c).collect();
    let occ = padded_occupancy(ndim, m, len, &targets, &sources);
    let occ_refs: Vec<&[bool]> = occ.iter().map(|o| o.as_slice()).collect();
    let pairs: Vec<&[(usize, &[Complex64])]> = live.chunks(2).collect();
    let has_zero_group = (0..groups).any(|j| !live.iter().any(|&(k, _)| k == j));
    BUFS.with(|cell| {
        let mut bufs = cell.borrow_mut();
        if bufs.len() < pairs.len() {
            bufs.resize_with(pairs.len(), Vec::new);
        }
        let bufs = &mut bufs[..pairs.len()];
        let compact = (ndim == 3).then(|| CompactIndex::new(&occ));
        for (buf, pair) in bufs.iter_mut().zip(&pairs) {
            let srcs: Vec<&[Complex64]> = pair.iter().map(|&(_, c)| c).collect();
            match &compact {
                Some(ci) => ci.fill(m, &targets, &srcs, buf),
                None => {
                    buf.resize(total, zero);
                    fill_padded(ndim, m, len, &targets, &srcs, &occ, buf);
                }
            }
        }
        let mut sums = vec![[0.0; LANES]; groups];
        let mut maxs = vec![[0.0f64; LANES]; groups];
        // (buffer, imaginary part) of each member of every field
        let mut members: Vec<Vec<(usize, bool)>> = vec![Vec::new(); groups];
        for (b, pair) in pairs.iter().enumerate() {
            for (i, &(gid, _)) in pair.iter().enumerate() {
                members[gid].push((b, i == 1));
            }
        }
        const CHUNK: usize = 256;
        let visit = |lines: &[&[Complex64]]| {
            let n = lines[0].len();
            let mut sq = [0.0f64; CHUNK];
            for start in (0..n).step_by(CHUNK) {
                let cnt = CHUNK.min(n - start);
                for (gid, mem) in members.iter().enumerate() {
                    let Some((&(b0, im0), rest)) = mem.split_first() else {
                        continue;
                    };
                    let sq = &mut sq[..cnt];
                    let part = |b: usize| &lines[b][start..start + cnt];
                    if im0 {
                        sq.iter_mut().zip(part(b0)).for_each(|(a, z)| *a = z.im * z.im);
                    } else {
                        sq.iter_mut().zip(part(b0)).for_each(|(a, z)| *a = z.re * z.re);
                    }
                    for &(b, im) in rest {
                        if im {
                            sq.iter_mut().zip(part(b)).for_each(|(a, z)| *a += z.im * z.im);
                        } else {
                            sq.iter_mut().zip(part(b)).for_each(|(a, z)| *a += z.re * z.re);
                        }
                    }
                    let (sum, max) = (&mut sums[gid], &mut maxs[gid]);
                    let mut chunks = sq.chunks_exact(LANES);
                    for c in &mut chunks {
                        for l in 0..LANES {
                            sum[l] += g(c[l]);
                            // plain comparison vectorizes; NaN is ignored as with f64::max
                            max[l] = if c[l] > max[l] { c[l] } else { max[l] };
                        }
                    }
                    for (l, &a) in chunks.remainder().iter().enumerate() {
                        sum[l] += g(a);
                        max[l] = max[l].max(a);
                    }
                }
            }
        };
        match &compact {
            Some(ci) => fft::compact_visit_3d(bufs, len, FftDirection::Inverse, ci.lists(), visit),
            None => {
                fft::transform_pruned_visit(bufs, ndim, len, FftDirection::Inverse, &occ_refs, visit)
            }
        }
        let g0 = if has_zero_group {
            total as f64 * g(0.0)
        } else {
            0.0
        };
        (0..groups)
            .map(|j| {
                if live.iter().any(|&(k, _)| k == j) {
                    (
                        sums[j].iter().sum(),
                        maxs[j].iter().copied().fold(0.0, f64::max),
                    )
                } else {
                    (g0, 0.0)
                }
            })
            .collect()
    })
}

/// Inverse transform of `a + i b` zero-padded from the `m` box to `len`,
/// handed to `f` in a thread-local buffer.
fn with_padded_inverse<R>(
    ndim: usize,
    m: usize,
    pair: &[&[Complex64]],
    len: usize,
    f: impl FnOnce(&[Complex64]) -> R,
) -> R {
    thread_local! {
        static BUF: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    }
    assert!(len >= m && len % 2 == 0 && (2..=3).contains(&ndim));
    let targets = axis_targets(m, len);
    let total = len.pow(ndim as u32);
    let occ = padded_occupancy(ndim, m, len, &targets, pair);
    let occ_refs: Vec<&[bool]> = occ.iter().map(|o| o.as_slice()).collect();
    BUF.with(|cell| {
        let mut buf = cell.borrow_mut();
        buf.resize(total, Complex64::default());
        fill_padded(ndim, m, len, &targets, pair, &occ, &mut buf);
        fft::transform_pruned(&mut buf, ndim, len, FftDirection::Inverse, &occ_refs);
        f(&buf)
    })
}

/// Normalized Fourier coefficients of real fields on an `m^ndim` grid.
pub(crate) fn analyze_real(ndim: usize, m: usize, reals: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let total = m.pow(ndim as u32);
    let scale = 1.0 / total as f64;
    let partner = |idx: usize| -> usize {
        let mut p = 0;
        let mut rest = idx;
        let mut stride = 1;
        for _ in 0..ndim {
            let i = rest % m;
            rest /= m;
            p += ((m - i) % m) * stride;
            stride *= m;
        }
        p
    };
    let mut out = Vec::with_capacity(reals.len());
    for pair in reals.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| Complex64::new(x, y))
                .collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        debug_assert_eq!(buf.len(), total);
        fft::transform(&mut buf, ndim, m, FftDirection::Forward);
        if pair.len() == 1 {
            out.push(buf.iter().map(|z| z * scale).collect());
        } else {
            let mut a = vec![Complex64::default(); total];
            let mut b = vec![Complex64::default(); total];
            for idx in 0..total {
                let z = buf[idx];
                let zp = buf[partner(idx)].conj();
                a[idx] = (z + zp) * (0.5 * scale);
                b[idx] = (z - zp) * Complex64::new(0.0, -0.5 * scale);
            }
            out.push(a);
            out.push(b);
        }
    }
    out
}

/// For each source index along an axis, the target indices and weights in
/// the padded axis.
fn axis_targets(m: usize, len: usize) -> Vec<Vec<(usize, f64)>> {
    (0..m)
        .map(|i| {
            if len == m {
                vec![(i, 1.0)]
            } else if i < m / 2 {
                vec![(i, 1.0)]
            } else if i > m / 2 {
                vec![(i + len - m, 1.0)]
            } else {
                vec![(m / 2, 0.5), (len - m / 2, 0.5)]
            }
        })
        .collect()
}

/// Padded indices per axis touched by the nonzero coefficients of any of
/// `sources`.
fn padded_occupancy(
    ndim: usize,
    m: usize,
    len: usize,
    targets: &[Vec<(usize, f64)>],
    sources: &[&[Complex64]],
) -> Vec<Vec<bool>> {
    let zero = Complex64::default();
    let mut occ = vec![vec![false; len]; ndim];
    let mut src_occ = vec![vec![false; m]; ndim];
    for src in sources {
        for (r, row) in src.chunks_exact(m).enumerate() {
            let mut any = false;
            for (i1, &val) in row.iter().enumerate() {
                if val != zero {
                    src_occ[0][i1] = true;
                    any = true;
                }
            }
            if any {
                src_occ[1][r % m] = true;
                if ndim == 3 {
                    src_occ[2][r / m] = true;
                }
            }
        }
    }
    for (axis, so) in src_occ.iter().enumerate() {
        for (i, _) in so.iter().enumerate().filter(|(_, &b)| b) {
            for &(t, _) in &targets[i] {
                occ[axis][t] = true;
            }
        }
    }
    occ
}

/// Positions of the occupied padded indices of a 3-D cube, for buffers
/// that store only the occupied product set (x fastest).
struct CompactIndex {
    lists: [Vec<usize>; 3],
    /// Padded index to compact position, `usize::MAX` when unoccupied.
    pos: [Vec<usize>; 3],
}

impl CompactIndex {
    fn new(occ: &[Vec<bool>]) -> Self {
        let list = |o: &[bool]| -> Vec<usize> { (0..o.len()).filter(|&i| o[i]).collect() };
        let lists = [list(&occ[0]), list(&occ[1]), list(&occ[2])];
        let pos = std::array::from_fn(|a| {
            let mut p = vec![usize::MAX; occ[a].len()];
            for (j, &i) in lists[a].iter().enumerate() {
                p[i] = j;
            }
            p
        });
        Self { lists, pos }
    }

    fn lists(&self) -> [&[usize]; 3] {
        [&self.lists[0], &self.lists[1], &self.lists[2]]
    }

    /// Scatters `a + i b` from the `m^3` box into the compact cube.
    fn fill(
        &self,
        m: usize,
        targets: &[Vec<(usize, f64)>],
        pair: &[&[Complex64]],
        dst: &mut Vec<Complex64>,
    ) {
        let zero = Complex64::default();
        let (n0, n1) = (self.lists[0].len(), self.lists[1].len());
        dst.clear();
        dst.resize(n0 * n1 * self.lists[2].len(), zero);
        // compact targets along x; only the Nyquist index has two
        let x: Vec<(usize, f64)> = targets
            .iter()
            .map(|t| t.first().map_or((0, 0.0), |&(i, w)| (self.pos[0][i], w)))
            .collect();
        let x_extra: Vec<(usize, usize, f64)> = targets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.len() > 1)
            .flat_map(|(i, t)| t[1..].iter().map(move |&(j, w)| (i, j, w)))
            .map(|(i, j, w)| (i, self.pos[0][j], w))
            .collect();
        let factors = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        for (src, &factor) in pair.iter().zip(&factors) {
            for (r, row) in src.chunks_exact(m).enumerate() {
                if row.iter().all(|z| *z == zero) {
                    continue;
                }
                let (i2, i3) = (r % m, r / m);
                for &(t3, w3) in &targets[i3] {
                    for &(t2, w2) in &targets[i2] {
                        let base = n0 * (self.pos[1][t2] + n1 * self.pos[2][t3]);
                        let scale = factor * (w2 * w3);
                        let out = &mut dst[base..base + n0];
                        for (&val, &(p, w)) in row.iter().zip(&x) {
                            if val != zero {
                                out[p] += val * scale * w;
                            }
                        }
                        for &(i, p, w) in &x_extra {
                            if row[i] != zero {
                                out[p] += row[i] * scale * w;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Zeroes the occupied product set of `dst` and scatters `a + i b` into it.
/// Entries outside the product set are left untouched.
fn fill_padded(
    ndim: usize,
    m: usize,
    len: usize,
    targets: &[Vec<(usize, f64)>],
    pair: &[&[Complex64]],
    occ: &[Vec<bool>],
    dst: &mut [Complex64],
) {
    let zero = Complex64::default();
    let list = |o: &[bool]| -> Vec<usize> { (0..o.len()).filter(|&i| o[i]).collect() };
    let l0 = list(&occ[0]);
    let l1 = list(&occ[1]);
    let l2 = if ndim == 3 { list(&occ[2]) } else { vec![0] };
    for &t3 in &l2 {
        for &t2 in &l1 {
            let base = len * (t2 + len * t3);
            for &t1 in &l0 {
                dst[base + t1] = zero;
            }
        }
    }
    let factors = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    let m3 = if ndim == 3 { m } else { 1 };
    for (src, &factor) in pair.iter().zip(&factors) {
        for i3 in 0..m3 {
            for i2 in 0..m {
                let row = &src[m * (i2 + m * i3)..m * (i2 + m * i3) + m];
                if row.iter().all(|z| *z == zero) {
                    continue;
                }
                let t3s: &[(usize, f64)] = if ndim == 3 { &targets[i3] } else { &[(0, 1.0)] };
                for &(t3, w3) in t3s {
                    for &(t2, w2) in &targets[i2] {
                        let base = len * (t2 + len * t3);
                        for (i1, &val) in row.iter().enumerate() {
                            if val == zero {
                                continue;
                            }
                            for &(t1, w1) in &targets[i1] {
                                dst[base + t1] += val * factor * (w1 * w2 * w3);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Samples of a spectral field on the `2M` grid.
pub fn oversampled(s: &SpectralField) -> Vec<Vec<f64>> {
    let m = s.grid().modes();
    let c = s.components();
    synthesize(3, m, &[&c[0], &c[1], &c[2]], 2 * m)
}
