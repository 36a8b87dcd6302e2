//! Dense linear-algebra helpers: matrix exponential by scaling and squaring
//! with diagonal Padé approximants, complex solves, and a small
//! eigendecomposition for the non-symmetric matrices that show up as
//! ladder generators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

// Padé numerator coefficients b_0..b_m and the 1-norm thresholds theta_m
// below which the degree-m approximant is accurate to unit roundoff.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
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
const PADE13: [f64; 14] = [
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
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` for a real square matrix.
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(ident);
    }
    let nrm = norm1(a);
    if nrm == 0.0 {
        return Ok(ident);
    }

    for &(m, theta) in &THETA {
        if nrm <= theta {
            let b: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, b, &ident);
        }
    }

    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);
    let mut r = pade13(&scaled, &ident)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// `e^{A x}`.
pub fn expm_scaled(a: &DMatrix<f64>, x: f64) -> Result<DMatrix<f64>> {
    expm(&(a * x))
}

fn pade_low(a: &DMatrix<f64>, b: &[f64], ident: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let a2 = a * a;
    let m = b.len() - 1;
    // U = A * sum_{k odd} b_k A^{k-1}, V = sum_{k even} b_k A^k
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let n = a.nrows();
    let mut u_inner = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    for (k, &bk) in b.iter().enumerate() {
        if k % 2 == 1 {
            u_inner += &powers[k / 2] * bk;
        } else {
            v += &powers[k / 2] * bk;
        }
    }
    let u = a * u_inner;
    solve_pade(&u, &v)
}

fn pade13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let b = &PADE13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + ident * b[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + ident * b[0];
    solve_pade(&u, &v)
}

// r = (V - U)^{-1} (V + U)
fn solve_pade(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::NonFinite("singular Padé denominator".into()))
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Solve `M x = b` over the complex numbers; `None` when `M` is singular.
pub fn complex_solve(m: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    let x = m.clone().lu().solve(b)?;
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Eigenvalues and unit-norm right eigenvectors (as columns) of a real
/// matrix. Eigenvalues are sorted by decreasing real part, then by
/// decreasing imaginary part; complex eigenvalues come in exact conjugate
/// pairs whose eigenvectors are exact conjugates of each other.
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn eigen(a: &DMatrix<f64>, imag_tol: f64) -> Eigen {
    let n = a.nrows();
    let raw = a.complex_eigenvalues();
    let scale = raw.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);

    // Snap near-real eigenvalues onto the real axis and pair the rest.
    let mut reals = Vec::new();
    let mut uppers = Vec::new();
    for z in raw.iter() {
        if z.im.abs() <= imag_tol * scale {
            reals.push(Complex64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            uppers.push(*z);
        }
    }
    let mut values: Vec<Complex64> = reals;
    for z in &uppers {
        values.push(*z);
        values.push(z.conj());
    }
    values.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });

    let ac = to_complex(a);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut col = 0;
    while col < n {
        let lam = values[col];
        let v = inverse_iteration(&ac, lam, scale);
        vectors.set_column(col, &v);
        if lam.im > 0.0 && col + 1 < n {
            vectors.set_column(col + 1, &v.map(|z| z.conj()));
            col += 2;
        } else {
            col += 1;
        }
    }
    Eigen { values, vectors }
}

fn inverse_iteration(a: &DMatrix<Complex64>, lam: Complex64, scale: f64) -> DVector<Complex64> {
    let n = a.nrows();
    let shift = lam + Complex64::new(scale * 1e-13, scale * 1e-13);
    let m = a - DMatrix::<Complex64>::identity(n, n) * shift;
    let lu = m.lu();
    let mut v = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.05));
    for _ in 0..4 {
        let w = match lu.solve(&v) {
            Some(w) if w.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => w,
            _ => break,
        };
        let nrm = w.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            break;
        }
        v = w / Complex64::new(nrm, 0.0);
    }
    // Fix the phase so the largest entry is real and positive.
    let (imax, _) =
        v.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc },
        );
    let phase = v[imax] / Complex64::new(v[imax].norm(), 0.0);
    v.map(|z| z / phase)
}

/// 1-norm condition number of a complex matrix, infinite when singular.
pub fn condition_1(m: &DMatrix<Complex64>) -> (f64, Option<DMatrix<Complex64>>) {
    let n1 = |x: &DMatrix<Complex64>| {
        (0..x.ncols())
            .map(|j| x.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match m.clone().try_inverse() {
        Some(inv) if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
            (n1(m) * n1(&inv), Some(inv))
        }
        _ => (f64::INFINITY, None),
    }
}
