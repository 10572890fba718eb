use std::sync::OnceLock;

use crate::num::Real;

use super::PointS3;

/// One representative from each antipodal pair of the 120 vertices of the 600-cell
/// (the unit icosians), 60 points in all.
pub fn pole_design() -> &'static [[f64; 4]] {
    static DESIGN: OnceLock<Vec<[f64; 4]>> = OnceLock::new();
    DESIGN.get_or_init(build_design)
}

fn build_design() -> Vec<[f64; 4]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut all: Vec<[f64; 4]> = Vec::with_capacity(120);
    for i in 0..4 {
        for s in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[i] = s;
            all.push(v);
        }
    }
    for mask in 0..16u32 {
        all.push(std::array::from_fn(|i| {
            if mask >> i & 1 == 1 {
                -0.5
            } else {
                0.5
            }
        }));
    }
    // Even permutations of (0, ±1/2, ±φ/2, ±1/(2φ)).
    let base = [0.0, 0.5, phi / 2.0, 1.0 / (2.0 * phi)];
    for perm in even_permutations() {
        for signs in 0..8u32 {
            let mut v = [0.0; 4];
            for k in 0..4 {
                let mut x = base[k];
                if k > 0 && signs >> (k - 1) & 1 == 1 {
                    x = -x;
                }
                v[perm[k]] = x;
            }
            all.push(v);
        }
    }
    debug_assert_eq!(all.len(), 120);
    all.into_iter()
        .filter(|v| {
            let first = v.iter().find(|x| **x != 0.0).copied().unwrap_or(0.0);
            first > 0.0
        })
        .collect()
}

fn even_permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(12);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let distinct = (0..4).all(|i| (0..i).all(|j| p[i] != p[j]));
                    if distinct && inversions(&p).is_multiple_of(2) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn inversions(p: &[usize; 4]) -> usize {
    (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .filter(|&(i, j)| p[i] > p[j])
        .count()
}

/// The design point maximizing the minimum chordal distance to every sample of
/// every curve. Ties resolve to the earliest design point.
pub fn select_pole<'a, T: Real>(
    samples: impl IntoIterator<Item = &'a [PointS3<T>]>,
) -> PointS3<T> {
    let design = pole_design();
    let mut best = vec![f64::INFINITY; design.len()];
    for chunk in samples {
        for p in chunk {
            let c = p.coords().map(|x| x.as_f64());
            for (b, d) in best.iter_mut().zip(design) {
                let dd: f64 = (0..4).map(|i| (c[i] - d[i]).powi(2)).sum();
                if dd < *b {
                    *b = dd;
                }
            }
        }
    }
    let (idx, _) = best
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| {
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    PointS3::normalized(design[idx].map(T::lit))
}
