//! Exact Euclidean distance transform (separable lower-envelope algorithm).

const INF: f64 = 1e30;

/// Squared distance, in cell units, from every cell of the `ext` box to the
/// nearest cell whose `seed` flag is set. Axis 0 is fastest in memory.
pub fn squared_edt(seed: &[bool], ext: [usize; 3], dim: usize) -> Vec<f64> {
    let mut f: Vec<f64> = seed.iter().map(|&s| if s { 0.0 } else { INF }).collect();
    let stride = [1, ext[0], ext[0] * ext[1]];
    let n_max = ext[..dim].iter().copied().max().unwrap_or(1);
    let mut line = vec![0.0; n_max];
    let mut out = vec![0.0; n_max];
    let mut v = vec![0usize; n_max];
    let mut z = vec![0.0; n_max + 1];
    for axis in 0..dim {
        let n = ext[axis];
        let s = stride[axis];
        let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        let (ea, eb) = (ext[others[0]], ext[others[1]]);
        let (sa, sb) = (stride[others[0]], stride[others[1]]);
        for b in 0..eb {
            for a in 0..ea {
                let base = a * sa + b * sb;
                for i in 0..n {
                    line[i] = f[base + i * s];
                }
                transform_line(&line[..n], &mut out[..n], &mut v, &mut z);
                for i in 0..n {
                    f[base + i * s] = out[i];
                }
            }
        }
    }
    f
}

fn transform_line(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let first = f.iter().position(|&x| x < INF);
    let Some(first) = first else {
        d.iter_mut().for_each(|x| *x = INF);
        return;
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        d[q] = dq * dq + f[p];
    }
}
