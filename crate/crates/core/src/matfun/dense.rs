//! Dense matrix exponential (scaling and squaring with diagonal Padé
//! approximants) and simultaneous evaluation of `e^X`, `φ₁(X)`, `φ₂(X)`.

use nalgebra::DMatrix;

// Backward-error thresholds for Padé degrees 3, 5, 7, 9, 13 in double precision.
const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
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

pub fn norm_one(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Padé approximant of
/// degree up to 13.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square());
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = norm_one(a);
    let ident = DMatrix::<f64>::identity(n, n);

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = a * a;
            let mut pow = ident.clone();
            let mut u = &ident * coeffs[1];
            let mut v = &ident * coeffs[0];
            for k in 1..=m / 2 {
                pow = &pow * &a2;
                u += &pow * coeffs[2 * k + 1];
                v += &pow * coeffs[2 * k];
            }
            let u = a * u;
            return pade_solve(&u, &v);
        }
    }

    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        libm::ceil(libm::log2(norm / theta13)) as i32
    } else {
        0
    };
    let a = a * libm::exp2(-(s as f64));
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn pade_solve(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).expect("Padé denominator is nonsingular for admissible norms")
}

/// `e^X`, `φ₁(X)`, `φ₂(X)` for the same argument.
#[derive(Clone, Debug)]
pub struct PhiMatrices {
    pub exp: DMatrix<f64>,
    pub phi1: DMatrix<f64>,
    pub phi2: DMatrix<f64>,
}

const PHI_SCALING_THETA: f64 = 0.5;
const PHI_TAYLOR_DEGREE: usize = 13;

/// Evaluates all three functions by scaling `X` below norm 1/2, summing the
/// Taylor series of `φ₂` there and recovering `φ₁ = I + Xφ₂`,
/// `e^X = I + Xφ₁`, then undoing the scaling with the doubling formulas.
pub fn phi_matrices(x: &DMatrix<f64>) -> PhiMatrices {
    assert!(x.is_square());
    let n = x.nrows();
    let norm = norm_one(x);
    let s = if norm > PHI_SCALING_THETA {
        libm::ceil(libm::log2(norm / PHI_SCALING_THETA)) as i32
    } else {
        0
    };
    let y = x * libm::exp2(-(s as f64));
    let ident = DMatrix::<f64>::identity(n, n);

    // φ₂(Y) = Σ_k Y^k / (k+2)!
    let mut inv_fact = [0.0; PHI_TAYLOR_DEGREE + 3];
    inv_fact[0] = 1.0;
    for k in 1..inv_fact.len() {
        inv_fact[k] = inv_fact[k - 1] / k as f64;
    }
    let mut phi2 = &ident * inv_fact[PHI_TAYLOR_DEGREE + 2];
    for k in (0..PHI_TAYLOR_DEGREE).rev() {
        phi2 = &y * phi2;
        for i in 0..n {
            phi2[(i, i)] += inv_fact[k + 2];
        }
    }
    let mut phi1 = &y * &phi2;
    for i in 0..n {
        phi1[(i, i)] += 1.0;
    }
    let mut exp = &y * &phi1;
    for i in 0..n {
        exp[(i, i)] += 1.0;
    }
    let mut out = PhiMatrices { exp, phi1, phi2 };
    for _ in 0..s {
        out = out.doubled();
    }
    out
}

impl PhiMatrices {
    /// Functions of `2X` from functions of `X`:
    /// `e^{2X} = (e^X)²`, `φ₁(2X) = (e^X φ₁ + φ₁)/2`,
    /// `φ₂(2X) = (e^X φ₂ + φ₁ + φ₂)/4`.
    pub fn doubled(&self) -> PhiMatrices {
        let exp = &self.exp * &self.exp;
        let phi1 = (&self.exp * &self.phi1 + &self.phi1) * 0.5;
        let phi2 = (&self.exp * &self.phi2 + &self.phi1 + &self.phi2) * 0.25;
        PhiMatrices { exp, phi1, phi2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases() {
        for z in [-40.0, -3.0, -1.0, -1e-3, 0.0, 0.5] {
            let m = DMatrix::from_element(1, 1, z);
            let e = expm(&m)[(0, 0)];
            assert!((e - libm::exp(z)).abs() <= 1e-14 * libm::exp(z).max(1.0), "z = {z}");
            let p = phi_matrices(&m);
            let phi1 = if z == 0.0 { 1.0 } else { libm::expm1(z) / z };
            let phi2 = if z == 0.0 { 0.5 } else { (phi1 - 1.0) / z };
            assert!((p.exp[(0, 0)] - libm::exp(z)).abs() < 1e-14);
            assert!((p.phi1[(0, 0)] - phi1).abs() < 1e-14, "z = {z}");
            // the closed form for φ₂ cancels near 0; compare loosely there
            let tol = if z.abs() < 1e-2 { 1e-10 } else { 1e-14 };
            assert!((p.phi2[(0, 0)] - phi2).abs() < tol, "z = {z}");
        }
    }

    #[test]
    fn every_pade_degree_agrees_with_diagonal_exponential() {
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 50.0] {
            let d = [-1.0, -0.3, 0.2];
            let m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(3, d.iter().map(|v| v * scale)));
            let e = expm(&m);
            for (i, v) in d.iter().enumerate() {
                let exact = libm::exp(v * scale);
                assert!((e[(i, i)] - exact).abs() <= 1e-13 * exact, "scale {scale}");
            }
        }
    }
}
