//! Multi-dimensional FFT passes over x-fastest cubes, built from 1-D
//! `rustfft` plans. Transforms are unnormalized.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

const BATCH: usize = 16;

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, matches!(direction, FftDirection::Forward));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Full transform of an `ndim`-cube of side `len`.
pub(crate) fn transform(data: &mut [Complex64], ndim: usize, len: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), len.pow(ndim as u32));
    let fft = plan(len, direction);
    for axis in 0..ndim {
        pass(data, ndim, len, axis, fft.as_ref(), None);
    }
}

/// Occupancy of a cube: entries outside `occupied[0] x occupied[1] x ...`
/// are zero, and only entries inside that product set need to be
/// initialized.
struct Pruning<'a> {
    occupied: &'a [&'a [bool]],
    /// Occupied indices per axis.
    lists: Vec<Vec<usize>>,
    /// Axis order: densest first so the sparsest index filters longest; on
    /// ties the contiguous axis goes last since its pass is the cheapest.
    order: Vec<usize>,
}

impl<'a> Pruning<'a> {
    fn new(occupied: &'a [&'a [bool]]) -> Self {
        let lists: Vec<Vec<usize>> = occupied
            .iter()
            .map(|o| (0..o.len()).filter(|&i| o[i]).collect())
            .collect();
        let mut order: Vec<usize> = (0..occupied.len()).collect();
        order.sort_by(|&a, &b| lists[b].len().cmp(&lists[a].len()).then(b.cmp(&a)));
        Self {
            occupied,
            lists,
            order,
        }
    }
}

/// Transform of a cube whose nonzero entries lie inside the occupied
/// product set. Entries outside that set are never read, so they may hold
/// anything on entry; the result equals [`transform`] of the zero-filled
/// cube.
pub(crate) fn transform_pruned(
    data: &mut [Complex64],
    ndim: usize,
    len: usize,
    direction: FftDirection,
    occupied: &[&[bool]],
) {
    debug_assert_eq!(occupied.len(), ndim);
    let fft = plan(len, direction);
    let pruning = Pruning::new(occupied);
    let mut pending = vec![true; ndim];
    for &axis in &pruning.order {
        pending[axis] = false;
        pass(
            data,
            ndim,
            len,
            axis,
            fft.as_ref(),
            Some((&pruning, &pending)),
        );
    }
}

/// [`transform_pruned`] applied to every buffer, with the last axis pass
/// fused into `visit`: it receives batches of finished lines, one slice per
/// buffer, covering every point exactly once and in matching order across
/// buffers. The buffers are left partially transformed.
pub(crate) fn transform_pruned_visit(
    bufs: &mut [Vec<Complex64>],
    ndim: usize,
    len: usize,
    direction: FftDirection,
    occupied: &[&[bool]],
    mut visit: impl FnMut(&[&[Complex64]]),
) {
    debug_assert_eq!(occupied.len(), ndim);
    let fft = plan(len, direction);
    let pruning = Pruning::new(occupied);
    let (&last, head) = pruning.order.split_last().expect("at least one axis");
    for data in bufs.iter_mut() {
        let mut pending = vec![true; ndim];
        for &axis in head {
            pending[axis] = false;
            pass(
                data,
                ndim,
                len,
                axis,
                fft.as_ref(),
                Some((&pruning, &pending)),
            );
        }
    }
    let stride = len.pow(last as u32);
    let block = stride * len;
    let total = len.pow(ndim as u32);
    let rows = &pruning.lists[last];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if last == 0 {
        let gaps = unoccupied_runs(occupied[0]);
        // contiguous lines: transform runs of them in place
        for off in (0..total).step_by(BATCH * len) {
            let end = (off + BATCH * len).min(total);
            for data in bufs.iter_mut() {
                let run = &mut data[off..end];
                for line in run.chunks_exact_mut(len) {
                    for r in &gaps {
                        line[r.clone()].fill(Complex64::default());
                    }
                }
                fft.process_with_scratch(run, &mut scratch);
            }
            let views: Vec<&[Complex64]> = bufs.iter().map(|d| &d[off..end]).collect();
            visit(&views);
        }
        return;
    }
    let mut lines = vec![vec![Complex64::default(); BATCH * len]; bufs.len()];
    let mut starts = Vec::with_capacity(BATCH);
    let mut flush = |starts: &mut Vec<usize>, lines: &mut [Vec<Complex64>]| {
        if starts.is_empty() {
            return;
        }
        let n = starts.len();
        for (data, line) in bufs.iter().zip(lines.iter_mut()) {
            line[..n * len].fill(Complex64::default());
            for &j in rows {
                let off = j * stride;
                for (b, &s) in starts.iter().enumerate() {
                    line[b * len + j] = data[s + off];
                }
            }
            fft.process_with_scratch(&mut line[..n * len], &mut scratch);
        }
        let views: Vec<&[Complex64]> = lines.iter().map(|l| &l[..n * len]).collect();
        visit(&views);
        starts.clear();
    };
    for outer in (0..total).step_by(block) {
        for inner in 0..stride {
            starts.push(outer + inner);
            if starts.len() == BATCH {
                flush(&mut starts, &mut lines);
            }
        }
    }
    flush(&mut starts, &mut lines);
}

/// Three-dimensional transform of a cube stored compactly: `data` holds
/// only the product set `lists[0] x lists[1] x lists[2]` of occupied
/// indices, x fastest, and every other entry of the `len^3` cube is zero.
/// Finished planes of the full cube go to `visit`, one slice per buffer,
/// covering every point exactly once and in matching order across
/// buffers. The buffers are left unspecified.
///
/// After the first axis pass each plane across that axis is finished while
/// it sits in cache, so the full cube is never stored.
pub(crate) fn compact_visit_3d(
    bufs: &[Vec<Complex64>],
    len: usize,
    direction: FftDirection,
    lists: [&[usize]; 3],
    mut visit: impl FnMut(&[&[Complex64]]),
) {
    let n = [lists[0].len(), lists[1].len(), lists[2].len()];
    let cube = n[0] * n[1] * n[2];
    for d in bufs.iter() {
        debug_assert_eq!(d.len(), cube);
    }
    let strides = [1, n[0], n[0] * n[1]];
    let fft = plan(len, direction);
    // densest axis first; c is the sparsest since the b pass runs once per
    // occupied c column. Ties put the contiguous axis in the b slot.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| n[b].cmp(&n[a]).then(b.cmp(&a)));
    if n[order[1]] == n[order[2]] {
        order.swap(1, 2);
    }
    let [a, b, c] = order;
    let occupied = |axis: usize| {
        let mut o = vec![false; len];
        lists[axis].iter().for_each(|&i| o[i] = true);
        o
    };
    let gaps = [
        unoccupied_runs(&occupied(0)),
        unoccupied_runs(&occupied(1)),
        unoccupied_runs(&occupied(2)),
    ];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut lines = vec![Complex64::default(); BATCH * len];
    let mut offs = [0usize; BATCH];
    let per_plane = n[b] * n[c];
    thread_local! {
        static INTER: RefCell<Vec<Vec<Complex64>>> = const { RefCell::new(Vec::new()) };
    }
    INTER.with(|cell| {
        let mut inters = cell.borrow_mut();
        if inters.len() < bufs.len() {
            inters.resize_with(bufs.len(), Vec::new);
        }
        // pass a into inter[ia][ic][ib] over occupied (ib, ic); every entry
        // is written
        for (data, inter) in bufs.iter().zip(inters.iter_mut()) {
            inter.resize(len * per_plane, Complex64::default());
            for p0 in (0..per_plane).step_by(BATCH) {
                let cnt = BATCH.min(per_plane - p0);
                for (t, off) in offs[..cnt].iter_mut().enumerate() {
                    let p = p0 + t;
                    *off = (p % n[b]) * strides[b] + (p / n[b]) * strides[c];
                }
                for t in 0..cnt {
                    let line = &mut lines[t * len..(t + 1) * len];
                    for r in &gaps[a] {
                        line[r.clone()].fill(Complex64::default());
                    }
                }
                for (ia_o, &ia) in lists[a].iter().enumerate() {
                    let base = ia_o * strides[a];
                    for (t, &off) in offs[..cnt].iter().enumerate() {
                        lines[t * len + ia] = data[base + off];
                    }
                }
                fft.process_with_scratch(&mut lines[..cnt * len], &mut scratch);
                for ia in 0..len {
                    let dst = &mut inter[ia * per_plane + p0..ia * per_plane + p0 + cnt];
                    for (t, z) in dst.iter_mut().enumerate() {
                        *z = lines[t * len + ia];
                    }
                }
            }
        }

        // plane layout: c contiguous, b outer
        let mut planes = vec![vec![Complex64::default(); len * len]; bufs.len()];
        for ia in 0..len {
            for (inter, plane) in inters.iter().zip(planes.iter_mut()) {
                let src = &inter[ia * per_plane..(ia + 1) * per_plane];
                // b pass over the occupied c columns
                for (g, group) in lists[c].chunks(BATCH).enumerate() {
                    let cnt = group.len();
                    for t in 0..cnt {
                        let line = &mut lines[t * len..(t + 1) * len];
                        for r in &gaps[b] {
                            line[r.clone()].fill(Complex64::default());
                        }
                        let col = &src[(g * BATCH + t) * n[b]..(g * BATCH + t + 1) * n[b]];
                        for (&ib, &z) in lists[b].iter().zip(col) {
                            line[ib] = z;
                        }
                    }
                    fft.process_with_scratch(&mut lines[..cnt * len], &mut scratch);
                    for (ib, row) in plane.chunks_exact_mut(len).enumerate() {
                        for (t, &ic) in group.iter().enumerate() {
                            row[ic] = lines[t * len + ib];
                        }
                    }
                }
                for line in plane.chunks_exact_mut(len) {
                    for r in &gaps[c] {
                        line[r.clone()].fill(Complex64::default());
                    }
                }
                fft.process_with_scratch(plane, &mut scratch);
            }
            let views: Vec<&[Complex64]> = planes.iter().map(|p| p.as_slice()).collect();
            visit(&views);
        }
    });
}

/// Maximal index ranges where `occ` is false.
fn unoccupied_runs(occ: &[bool]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &o) in occ.iter().enumerate() {
        match (o, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..occ.len());
    }
    out
}

fn pass(
    data: &mut [Complex64],
    ndim: usize,
    len: usize,
    axis: usize,
    fft: &dyn Fft<f64>,
    filter: Option<(&Pruning, &[bool])>,
) {
    let stride = len.pow(axis as u32);
    let block = stride * len;
    let total = data.len();
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    let active = |start: usize| -> bool {
        match filter {
            None => true,
            Some((p, pending)) => (0..ndim)
                .filter(|&b| b != axis && pending[b])
                .all(|b| p.occupied[b][(start / len.pow(b as u32)) % len]),
        }
    };
    // positions along the axis that hold data; the rest are taken as zero
    let rows: Option<&[usize]> = filter.map(|(p, _)| p.lists[axis].as_slice());

    if axis == 0 {
        match rows {
            None => fft.process_with_scratch(data, &mut scratch),
            Some(rows) => {
                let gaps = unoccupied_runs(filter.expect("rows imply a filter").0.occupied[0]);
                debug_assert!(rows.len() + gaps.iter().map(|r| r.len()).sum::<usize>() == len);
                for (line, chunk) in data.chunks_exact_mut(len).enumerate() {
                    if active(line * len) {
                        for r in &gaps {
                            chunk[r.clone()].fill(Complex64::default());
                        }
                        fft.process_with_scratch(chunk, &mut scratch);
                    }
                }
            }
        }
        return;
    }

    let all: Vec<usize> = (0..len).collect();
    let rows = rows.unwrap_or(&all);
    let mut buf = vec![Complex64::default(); BATCH * len];
    let mut starts = Vec::with_capacity(BATCH);
    let mut flush = |starts: &mut Vec<usize>, data: &mut [Complex64]| {
        if starts.is_empty() {
            return;
        }
        let n = starts.len();
        if rows.len() < len {
            buf[..n * len].fill(Complex64::default());
        }
        for &j in rows {
            let off = j * stride;
            for (b, &s) in starts.iter().enumerate() {
                buf[b * len + j] = data[s + off];
            }
        }
        fft.process_with_scratch(&mut buf[..n * len], &mut scratch);
        for j in 0..len {
            let off = j * stride;
            for (b, &s) in starts.iter().enumerate() {
                data[s + off] = buf[b * len + j];
            }
        }
        starts.clear();
    };

    for outer in (0..total).step_by(block) {
        for inner in 0..stride {
            let start = outer + inner;
            if active(start) {
                starts.push(start);
                if starts.len() == BATCH {
                    flush(&mut starts, data);
                }
            }
        }
    }
    flush(&mut starts, data);
}
