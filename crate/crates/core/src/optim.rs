//! Derivative-free optimizers: Brent's 1-D minimizer, Nelder-Mead with a
//! perturbed restart, coordinate descent over a box, and Latin hypercube
//! start points. These back the sup-over-assertion step of the plausibility
//! engine and the nuisance-parameter profiling in the models.

use rand::Rng;

const GOLD: f64 = 0.381_966_011_250_105; // 2 - golden ratio

/// Brent's method: minimize `f` on `[a, b]`, combining golden-section steps
/// with parabolic interpolation. Returns `(argmin, min)`.
pub fn minimize_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let mut x = lo + GOLD * (hi - lo);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (hi - lo) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // Trial parabola through x, v, w.
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (lo - x) && p < q * (hi - x) {
                d = p / q;
                let u = x + d;
                if u - lo < tol2 || hi - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { hi - x } else { lo - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                hi = x;
            } else {
                lo = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                lo = u;
            } else {
                hi = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Nelder-Mead simplex minimization started at `x0` with per-coordinate
/// initial step `scale`. After convergence the simplex is rebuilt around the
/// incumbent once and the search repeated, which guards against premature
/// collapse. Returns `(argmin, min)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    scale: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let (mut best, mut fbest) = nelder_mead_once(f, x0, scale, tol, max_iter);
    let shrunk: Vec<f64> = scale.iter().map(|s| 0.25 * s).collect();
    let (cand, fcand) = nelder_mead_once(f, &best, &shrunk, tol, max_iter);
    if fcand < fbest {
        best = cand;
        fbest = fcand;
    }
    (best, fbest)
}

fn nelder_mead_once<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    scale: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if scale[i] != 0.0 { scale[i] } else { 0.1 };
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        // Order best -> worst.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&i, &j| fvals[i].total_cmp(&fvals[j]));
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let refvals: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = reordered;
        fvals = refvals;

        if (fvals[n] - fvals[0]).abs() <= tol * (1.0 + fvals[0].abs()) {
            let spread = (0..n)
                .map(|k| {
                    simplex
                        .iter()
                        .map(|v| v[k])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                            (lo.min(x), hi.max(x))
                        })
                })
                .map(|(lo, hi)| hi - lo)
                .fold(0.0f64, f64::max);
            if spread <= tol * 10.0 {
                break;
            }
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let lerp = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|k| centroid[k] + t * (simplex[n][k] - centroid[k]))
                .collect()
        };

        let xr = lerp(-1.0);
        let fr = f(&xr);
        if fr < fvals[0] {
            let xe = lerp(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                fvals[n] = fe;
            } else {
                simplex[n] = xr;
                fvals[n] = fr;
            }
        } else if fr < fvals[n - 1] {
            simplex[n] = xr;
            fvals[n] = fr;
        } else {
            let xc = if fr < fvals[n] { lerp(-0.5) } else { lerp(0.5) };
            let fc = f(&xc);
            if fc < fvals[n].min(fr) {
                simplex[n] = xc;
                fvals[n] = fc;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    for k in 0..n {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    fvals[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut bi = 0;
    for i in 1..=n {
        if fvals[i] < fvals[bi] {
            bi = i;
        }
    }
    (simplex[bi].clone(), fvals[bi])
}

/// Cyclic coordinate descent inside the box `[lo, hi]`: each pass runs
/// Brent's method along every coordinate in turn; stops when a full pass
/// improves the objective by less than `tol`. Returns `(argmin, min)`.
pub fn coordinate_descent<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_pass: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    let mut fx = f(&x);
    for _ in 0..max_pass {
        let f_start = fx;
        for k in 0..n {
            if hi[k] - lo[k] <= 0.0 {
                continue;
            }
            let mut probe = x.clone();
            let (xk, fk) = minimize_1d(
                |t| {
                    probe[k] = t;
                    f(&probe)
                },
                lo[k],
                hi[k],
                tol,
            );
            if fk < fx {
                x[k] = xk;
                fx = fk;
            }
        }
        if f_start - fx <= tol * (1.0 + fx.abs()) {
            break;
        }
    }
    (x, fx)
}

/// Latin hypercube sample of `n` points in the box `[lo, hi]`: each
/// coordinate is stratified into `n` equal bins with exactly one point per
/// bin, uniformly jittered within the bin.
pub fn latin_hypercube<R: Rng>(rng: &mut R, n: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    let strata: Vec<Vec<usize>> = (0..d)
        .map(|_| {
            let mut perm: Vec<usize> = (0..n).collect();
            // Fisher-Yates with the caller's RNG so draws are reproducible.
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            perm
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let cell = strata[k][i] as f64;
                    let u: f64 = rng.gen();
                    lo[k] + (hi[k] - lo[k]) * (cell + u) / n as f64
                })
                .collect()
        })
        .collect()
}
