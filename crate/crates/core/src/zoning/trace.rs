//! Boundary rings of a raster mask, traced along cell edges.
//!
//! Vertices live on the corner lattice `(row, col)` with `row in 0..=nrows`
//! and `col in 0..=ncols`. Every exposed side of a masked cell becomes a
//! directed edge with the cell on its right (rows grow downward), and edges
//! are chained into closed rings. Where two masked cells touch only at a
//! corner the walk turns right, so such cells end up in separate rings.

/// A closed ring of corner-lattice vertices; the first vertex is repeated at
/// the end. Collinear vertices are removed.
pub type Ring = Vec<(usize, usize)>;

const UP: (i64, i64) = (-1, 0);
const DOWN: (i64, i64) = (1, 0);
const LEFT: (i64, i64) = (0, -1);
const RIGHT: (i64, i64) = (0, 1);

pub fn trace_mask(mask: &[bool], nrows: usize, ncols: usize) -> Vec<Ring> {
    assert_eq!(mask.len(), nrows * ncols, "mask size does not match grid");
    let at = |r: i64, c: i64| -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < nrows
            && (c as usize) < ncols
            && mask[r as usize * ncols + c as usize]
    };

    let vcols = ncols + 1;
    let vid = |r: usize, c: usize| r * vcols + c;
    // (start vertex, direction) per edge.
    let mut edges: Vec<(usize, (i64, i64))> = Vec::new();
    for r in 0..nrows {
        for c in 0..ncols {
            if !mask[r * ncols + c] {
                continue;
            }
            let (ri, ci) = (r as i64, c as i64);
            if !at(ri - 1, ci) {
                edges.push((vid(r, c), RIGHT));
            }
            if !at(ri, ci + 1) {
                edges.push((vid(r, c + 1), DOWN));
            }
            if !at(ri + 1, ci) {
                edges.push((vid(r + 1, c + 1), LEFT));
            }
            if !at(ri, ci - 1) {
                edges.push((vid(r + 1, c), UP));
            }
        }
    }

    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); (nrows + 1) * vcols];
    for (i, &(start, _)) in edges.iter().enumerate() {
        outgoing[start].push(i);
    }
    let mut used = vec![false; edges.len()];
    let step = |v: usize, d: (i64, i64)| -> usize {
        let r = (v / vcols) as i64 + d.0;
        let c = (v % vcols) as i64 + d.1;
        r as usize * vcols + c as usize
    };
    // Turn preference relative to the incoming direction: right, straight,
    // left.
    let turns = |d: (i64, i64)| [(d.1, -d.0), d, (-d.1, d.0)];

    let mut rings = Vec::new();
    for first in 0..edges.len() {
        if used[first] {
            continue;
        }
        let origin = edges[first].0;
        let mut path = vec![origin];
        let mut current = first;
        loop {
            used[current] = true;
            let (start, dir) = edges[current];
            let end = step(start, dir);
            if end == origin {
                break;
            }
            path.push(end);
            let next = turns(dir).into_iter().find_map(|want| {
                outgoing[end]
                    .iter()
                    .copied()
                    .find(|&e| !used[e] && edges[e].1 == want)
            });
            match next {
                Some(e) => current = e,
                None => break,
            }
        }
        path.push(origin);
        rings.push(simplify(&path, vcols));
    }
    rings
}

fn simplify(path: &[usize], vcols: usize) -> Ring {
    let pts: Vec<(usize, usize)> = path.iter().map(|&v| (v / vcols, v % vcols)).collect();
    // `pts` is closed; drop vertices where the direction does not change,
    // treating the ring cyclically.
    let n = pts.len() - 1;
    let dir = |a: (usize, usize), b: (usize, usize)| {
        (
            (b.0 as i64 - a.0 as i64).signum(),
            (b.1 as i64 - a.1 as i64).signum(),
        )
    };
    let mut out: Ring = (0..n)
        .filter(|&i| {
            let prev = pts[(i + n - 1) % n];
            dir(prev, pts[i]) != dir(pts[i], pts[i + 1])
        })
        .map(|i| pts[i])
        .collect();
    if let Some(&p) = out.first() {
        out.push(p);
    }
    out
}

/// Signed shoelace area of a ring in cell units, positive for the ring
/// orientation produced around filled regions.
pub fn ring_area(ring: &Ring) -> f64 {
    let mut twice = 0.0;
    for w in ring.windows(2) {
        let (y0, x0) = (w[0].0 as f64, w[0].1 as f64);
        let (y1, x1) = (w[1].0 as f64, w[1].1 as f64);
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}
