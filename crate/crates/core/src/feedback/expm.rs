//! Dense matrix exponential by scaling and squaring with Pade approximants.
//!
//! Algorithm from: Higham, The Scaling and Squaring Method for the Matrix
//! Exponential Revisited. The input is pre-shifted by its mean eigenvalue
//! (trace / n), which strips the dominant rotation of stiff spectra like
//! the ones produced here and keeps the scaling count small.

use nalgebra::DMatrix;
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|v| v.norm()).sum();
        best = best.max(s);
    }
    best
}

pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let mu = a.trace() / n as f64;
    let shifted = a - CMat::identity(n, n) * mu;
    let core = expm_unshifted(&shifted);
    core * mu.exp()
}

// theta thresholds as published; the extra digits are inert in f64
#[allow(clippy::excessive_precision)]
fn expm_unshifted(a: &CMat) -> CMat {
    let norm = one_norm(a);
    let (u, v, squarings) = if norm < 1.495_585_217_958_292e-2 {
        let (u, v) = pade3(a);
        (u, v, 0u32)
    } else if norm < 2.539_398_330_063_230e-1 {
        let (u, v) = pade5(a);
        (u, v, 0)
    } else if norm < 9.504_178_996_162_932e-1 {
        let (u, v) = pade7(a);
        (u, v, 0)
    } else if norm < 2.097_847_961_257_068 {
        let (u, v) = pade9(a);
        (u, v, 0)
    } else {
        const THETA13: f64 = 5.371_920_351_148_152;
        let squarings = ((norm / THETA13).log2().ceil().max(0.0)) as u32;
        let scaled = a * Complex64::new(2f64.powi(-(squarings as i32)), 0.0);
        let (u, v) = pade13(&scaled);
        (u, v, squarings)
    };

    // Pade approximant is (V + U) / (V - U)
    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is singular; the scaling step should prevent this");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn cid(n: usize, c: f64) -> CMat {
    CMat::identity(n, n) * Complex64::new(c, 0.0)
}

fn pade3(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
    let n = a.nrows();
    let a2 = a * a;
    let u = a * (&a2 * Complex64::from(B[3]) + cid(n, B[1]));
    let v = a2 * Complex64::from(B[2]) + cid(n, B[0]);
    (u, v)
}

fn pade5(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
    let n = a.nrows();
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let u = a * (&a4 * Complex64::from(B[5]) + &a2 * Complex64::from(B[3]) + cid(n, B[1]));
    let v = a4 * Complex64::from(B[4]) + &a2 * Complex64::from(B[2]) + cid(n, B[0]);
    (u, v)
}

fn pade7(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 8] = [
        17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
    ];
    let n = a.nrows();
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u = a
        * (&a6 * Complex64::from(B[7])
            + &a4 * Complex64::from(B[5])
            + &a2 * Complex64::from(B[3])
            + cid(n, B[1]));
    let v = a6 * Complex64::from(B[6])
        + &a4 * Complex64::from(B[4])
        + &a2 * Complex64::from(B[2])
        + cid(n, B[0]);
    (u, v)
}

fn pade9(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 10] = [
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
    let n = a.nrows();
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let a8 = &a6 * &a2;
    let u = a
        * (&a8 * Complex64::from(B[9])
            + &a6 * Complex64::from(B[7])
            + &a4 * Complex64::from(B[5])
            + &a2 * Complex64::from(B[3])
            + cid(n, B[1]));
    let v = a8 * Complex64::from(B[8])
        + &a6 * Complex64::from(B[6])
        + &a4 * Complex64::from(B[4])
        + &a2 * Complex64::from(B[2])
        + cid(n, B[0]);
    (u, v)
}

fn pade13(a: &CMat) -> (CMat, CMat) {
    const B: [f64; 14] = [
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
    let n = a.nrows();
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let w =
        &a6 * Complex64::from(B[13]) + &a4 * Complex64::from(B[11]) + &a2 * Complex64::from(B[9]);
    let u = a
        * (&a6 * w
            + &a6 * Complex64::from(B[7])
            + &a4 * Complex64::from(B[5])
            + &a2 * Complex64::from(B[3])
            + cid(n, B[1]));
    let w2 =
        &a6 * Complex64::from(B[12]) + &a4 * Complex64::from(B[10]) + &a2 * Complex64::from(B[8]);
    let v = &a6 * w2
        + &a6 * Complex64::from(B[6])
        + &a4 * Complex64::from(B[4])
        + &a2 * Complex64::from(B[2])
        + cid(n, B[0]);
    (u, v)
}
