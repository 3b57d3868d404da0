use super::{ensure_square, identity, is_finite, norm_one, CMatrix, Lu, C64};
use crate::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant whose degree is chosen from the 1-norm.
pub fn matexp(a: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(CMatrix::zeros((0, 0)));
    }
    let norm = norm_one(a);
    if !norm.is_finite() {
        return Err(Error::Overflow { norm });
    }
    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let (u, v) = pade_low(a, m);
            return finish(&u, &v, 0, norm);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::Overflow { norm });
    }
    let scaled = a * C64::new(2f64.powi(-s), 0.0);
    let (u, v) = pade13(&scaled);
    finish(&u, &v, s as usize, norm)
}

fn scale(a: &CMatrix, c: f64) -> CMatrix {
    a * C64::new(c, 0.0)
}

fn pade_low(a: &CMatrix, m: usize) -> (CMatrix, CMatrix) {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut powers = vec![identity(n), a2.clone()];
    for _ in 2..=m / 2 {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }
    let mut u_inner = CMatrix::zeros((n, n));
    let mut v = CMatrix::zeros((n, n));
    for (k, p) in powers.iter().enumerate() {
        u_inner = u_inner + scale(p, b[2 * k + 1]);
        v = v + scale(p, b[2 * k]);
    }
    (a.dot(&u_inner), v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = &B13;
    let n = a.nrows();
    let id = identity(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_hi = scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]);
    let u_lo = scale(&a6, b[7]) + scale(&a4, b[5]) + scale(&a2, b[3]) + scale(&id, b[1]);
    let u = a.dot(&(a6.dot(&u_hi) + u_lo));
    let v_hi = scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]);
    let v_lo = scale(&a6, b[6]) + scale(&a4, b[4]) + scale(&a2, b[2]) + scale(&id, b[0]);
    let v = a6.dot(&v_hi) + v_lo;
    (u, v)
}

fn finish(u: &CMatrix, v: &CMatrix, squarings: usize, norm: f64) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    let lu = Lu::new(&q).map_err(|_| Error::Overflow { norm })?;
    let mut r = lu.solve(&p).map_err(|_| Error::Overflow { norm })?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if !is_finite(&r) {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
