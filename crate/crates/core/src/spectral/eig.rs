//! Eigenvalues of dense complex matrices: diagonal balancing, Householder
//! reduction to upper Hessenberg form, and the implicitly shifted
//! single-shift complex QR iteration with deflation (the `zlahqr` scheme,
//! eigenvalues only, so updates are confined to the active window).

use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};

#[inline]
fn cabs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Scales rows and columns by powers of two until row and column norms are
/// comparable. Exact similarity, so eigenvalues are unchanged.
pub(crate) fn balance(h: &mut [C64], n: usize) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += cabs1(h[j * n + i]);
                    r += cabs1(h[i * n + j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    h[i * n + j] *= inv;
                    h[j * n + i] *= f;
                }
            }
        }
    }
}

/// Householder generator for a 1 + len(x) vector (`zlarfg`): returns
/// (beta, tau) and overwrites x with the tail of v (v[0] = 1), so that
/// `(I - tau v v*)* [alpha; x] = [beta; 0]`.
fn householder(alpha: C64, x: &mut [C64]) -> (C64, C64) {
    let xnorm = crate::matrix::norm(x);
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (alpha, ZERO);
    }
    let full = (alpha.re * alpha.re + alpha.im * alpha.im + xnorm * xnorm).sqrt();
    let beta = if alpha.re >= 0.0 { -full } else { full };
    let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
    let scale = ONE / (alpha - beta);
    x.iter_mut().for_each(|v| *v *= scale);
    (C64::new(beta, 0.0), tau)
}

/// In-place reduction of the row-major n×n matrix to upper Hessenberg form
/// by unitary similarity.
pub(crate) fn hessenberg(h: &mut [C64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let alpha = h[(k + 1) * n + k];
        let tail = &mut v[1..len];
        for (i, t) in tail.iter_mut().enumerate() {
            *t = h[(k + 2 + i) * n + k];
        }
        let (beta, tau) = householder(alpha, tail);
        if tau == ZERO {
            continue;
        }
        v[0] = ONE;
        let v = &v[..len];
        h[(k + 1) * n + k] = beta;
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
        // Left: rows k+1.., columns k+1.. ← (I - conj(tau) v v*) · block
        let wl = &mut w[k + 1..n];
        wl.iter_mut().for_each(|x| *x = ZERO);
        for (i, vi) in v.iter().enumerate() {
            let row = &h[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            let cv = vi.conj();
            for (acc, a) in wl.iter_mut().zip(row) {
                *acc += cv * a;
            }
        }
        let ct = tau.conj();
        for (i, vi) in v.iter().enumerate() {
            let f = ct * vi;
            let row = &mut h[(k + 1 + i) * n + k + 1..(k + 2 + i) * n];
            for (a, acc) in row.iter_mut().zip(wl.iter()) {
                *a -= f * acc;
            }
        }
        // Right: all rows, columns k+1.. ← block · (I - tau v v*)
        for i in 0..n {
            let row = &mut h[i * n + k + 1..(i + 1) * n];
            let s: C64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            if s == ZERO {
                continue;
            }
            let f = tau * s;
            for (a, b) in row.iter_mut().zip(v) {
                *a -= f * b.conj();
            }
        }
    }
}

/// Outcome of the QR iteration on a Hessenberg matrix.
pub(crate) struct QrOutcome {
    pub eigenvalues: Vec<C64>,
    /// Index range `0..=unconverged` that failed to converge, if any.
    pub unconverged: Option<usize>,
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed in the process).
pub(crate) fn hessenberg_qr(h: &mut [C64], n: usize, max_steps: usize) -> QrOutcome {
    let mut w = vec![ZERO; n];
    if n == 0 {
        return QrOutcome { eigenvalues: w, unconverged: None };
    }
    if n == 1 {
        w[0] = h[0];
        return QrOutcome { eigenvalues: w, unconverged: None };
    }
    let at = |i: usize, j: usize| i * n + j;
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let smlnum = safmin * (n as f64 / ulp);
    const DAT1: f64 = 0.75;
    const KEXSH: usize = 10;

    // Make the subdiagonal real.
    for i in 1..n {
        let z = h[at(i, i - 1)];
        if z.im != 0.0 {
            let sc = (z / cabs1(z)).conj();
            let sc = sc / sc.norm();
            h[at(i, i - 1)] = C64::new(z.norm(), 0.0);
            for j in i..n {
                h[at(i, j)] *= sc;
            }
            let sc_c = sc.conj();
            for j in 0..=(i + 1).min(n - 1) {
                h[at(j, i)] *= sc_c;
            }
        }
    }

    let mut steps = 0usize;
    let mut kdefl = 0usize;
    let mut i = n as isize - 1;
    while i >= 0 {
        let iu = i as usize;
        let mut l = 0usize;
        let mut converged = false;
        loop {
            // Small subdiagonal search.
            let mut k = iu;
            while k > l {
                if cabs1(h[at(k, k - 1)]) <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[at(k - 1, k - 1)]) + cabs1(h[at(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += h[at(k - 1, k - 2)].re.abs();
                    }
                    if k + 1 < n {
                        tst += h[at(k + 1, k)].re.abs();
                    }
                }
                if h[at(k, k - 1)].re.abs() <= ulp * tst {
                    let a1 = cabs1(h[at(k, k - 1)]);
                    let a2 = cabs1(h[at(k - 1, k)]);
                    let ab = a1.max(a2);
                    let ba = a1.min(a2);
                    let b1 = cabs1(h[at(k, k)]);
                    let b2 = cabs1(h[at(k - 1, k - 1)] - h[at(k, k)]);
                    let aa = b1.max(b2);
                    let bb = b1.min(b2);
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[at(l, l - 1)] = ZERO;
            }
            if l >= iu {
                converged = true;
                break;
            }
            if steps >= max_steps {
                break;
            }
            steps += 1;
            kdefl += 1;
            let (i1, i2) = (l, iu);

            let t = if kdefl.is_multiple_of(2 * KEXSH) {
                C64::new(DAT1 * h[at(iu, iu - 1)].re.abs(), 0.0) + h[at(iu, iu)]
            } else if kdefl.is_multiple_of(KEXSH) {
                C64::new(DAT1 * h[at(l + 1, l)].re.abs(), 0.0) + h[at(l, l)]
            } else {
                let mut t = h[at(iu, iu)];
                let u = h[at(iu - 1, iu)].sqrt() * h[at(iu, iu - 1)].sqrt();
                let s0 = cabs1(u);
                if s0 != 0.0 {
                    let x = (h[at(iu - 1, iu - 1)] - t) * 0.5;
                    let sx = cabs1(x);
                    let s = s0.max(sx);
                    let mut y = ((x / s) * (x / s) + (u / s) * (u / s)).sqrt() * s;
                    if sx > 0.0 {
                        let xs = x / sx;
                        if xs.re * y.re + xs.im * y.im < 0.0 {
                            y = -y;
                        }
                    }
                    t -= u * (u / (x + y));
                }
                t
            };

            // Two consecutive small subdiagonals.
            let mut m = iu - 1;
            let mut v;
            loop {
                let h11 = h[at(m, m)];
                let h22 = h[at(m + 1, m + 1)];
                let h11s = h11 - t;
                let h21 = h[at(m + 1, m)].re;
                let s = cabs1(h11s) + h21.abs();
                let h11s = h11s / s;
                let h21 = h21 / s;
                v = [h11s, C64::new(h21, 0.0)];
                if m == l {
                    break;
                }
                let h10 = h[at(m, m - 1)].re;
                if h10.abs() * h21.abs() <= ulp * (cabs1(h11s) * (cabs1(h11) + cabs1(h22))) {
                    break;
                }
                m -= 1;
            }

            // Single-shift QR sweep.
            for k in m..iu {
                if k > m {
                    v = [h[at(k, k - 1)], h[at(k + 1, k - 1)]];
                }
                let mut tail = [v[1]];
                let (beta, t1) = householder(v[0], &mut tail);
                if k > m {
                    h[at(k, k - 1)] = beta;
                    h[at(k + 1, k - 1)] = ZERO;
                }
                let v2 = tail[0];
                let t2 = t1 * v2;
                let t1c = t1.conj();
                let t2c = t2.conj();
                {
                    let (top, bottom) = h.split_at_mut(at(k + 1, 0));
                    let rk = &mut top[at(k, k)..at(k, i2 + 1)];
                    let rk1 = &mut bottom[k..=i2];
                    for (a, b) in rk.iter_mut().zip(rk1.iter_mut()) {
                        let sum = t1c * *a + t2c * *b;
                        *a -= sum;
                        *b -= sum * v2;
                    }
                }
                let v2c = v2.conj();
                for j in i1..=(k + 2).min(iu) {
                    let p = at(j, k);
                    let sum = t1 * h[p] + t2 * h[p + 1];
                    h[p] -= sum;
                    h[p + 1] -= sum * v2c;
                }
                if k == m && m > l {
                    let temp = ONE - t1;
                    let temp = temp / temp.norm();
                    h[at(m + 1, m)] *= temp.conj();
                    if m + 2 <= iu {
                        h[at(m + 2, m + 1)] *= temp;
                    }
                    for j in m..=iu {
                        if j != m + 1 {
                            for c in j + 1..=i2 {
                                h[at(j, c)] *= temp;
                            }
                            let tc = temp.conj();
                            for r in i1..j {
                                h[at(r, j)] *= tc;
                            }
                        }
                    }
                }
            }

            let z = h[at(iu, iu - 1)];
            if z.im != 0.0 {
                let rz = z.norm();
                h[at(iu, iu - 1)] = C64::new(rz, 0.0);
                let temp = z / rz;
                let tc = temp.conj();
                for c in iu + 1..=i2 {
                    h[at(iu, c)] *= tc;
                }
                for r in i1..iu {
                    h[at(r, iu)] *= temp;
                }
            }
        }
        if !converged {
            let found = w[iu + 1..].to_vec();
            return QrOutcome { eigenvalues: found, unconverged: Some(iu) };
        }
        w[iu] = h[at(iu, iu)];
        kdefl = 0;
        i = l as isize - 1;
    }
    QrOutcome { eigenvalues: w, unconverged: None }
}

/// Upper bound on σ_min(H - λI) for upper Hessenberg H, from two steps of
/// inverse iteration with an O(n²) Hessenberg LU (partial pivoting between
/// adjacent rows).
pub(crate) fn hessenberg_sigma_min_bound(h: &ComplexMatrix, lambda: C64) -> f64 {
    let n = h.rows();
    if n == 0 {
        return 0.0;
    }
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    // Row-major copy of H - λI restricted to the Hessenberg band.
    let mut a = h.shifted(lambda);
    let mut swapped = vec![false; n];
    let mut mult = vec![ZERO; n];
    for k in 0..n.saturating_sub(1) {
        if cabs1(a[(k + 1, k)]) > cabs1(a[(k, k)]) {
            swapped[k] = true;
            for j in k..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(k + 1, j)];
                a[(k + 1, j)] = tmp;
            }
        }
        if a[(k, k)] == ZERO {
            a[(k, k)] = C64::new(tiny, 0.0);
        }
        let f = a[(k + 1, k)] / a[(k, k)];
        mult[k] = f;
        a[(k + 1, k)] = ZERO;
        if f != ZERO {
            for j in k + 1..n {
                let t = a[(k, j)];
                a[(k + 1, j)] -= f * t;
            }
        }
    }
    if a[(n - 1, n - 1)] == ZERO {
        a[(n - 1, n - 1)] = C64::new(tiny, 0.0);
    }
    let solve = |rhs: &mut [C64]| {
        for k in 0..n.saturating_sub(1) {
            if swapped[k] {
                rhs.swap(k, k + 1);
            }
            let t = rhs[k];
            rhs[k + 1] -= mult[k] * t;
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in i + 1..n {
                s -= a[(i, j)] * rhs[j];
            }
            rhs[i] = s / a[(i, i)];
        }
    };
    // Deterministic, non-degenerate start vector.
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.5 * ((i * 7919) % 13) as f64 / 13.0)).collect();
    for _ in 0..2 {
        let nx = crate::matrix::norm(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        solve(&mut x);
    }
    let nx = crate::matrix::norm(&x);
    if !nx.is_finite() || nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|z| *z /= nx);
    let r = h.shifted(lambda).matvec(&x);
    crate::matrix::norm(&r)
}
