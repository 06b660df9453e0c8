//! Matrix exponential by scaling and squaring with a diagonal Padé approximant
//! (Higham 2005 degree selection).

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, lu_solve, norm1, Matrix};

const THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
    (13, 5.371920351148152),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
        ],
        9 => &[
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
        ],
        13 => &[
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
        ],
        _ => unreachable!("no Padé table for degree {m}"),
    }
}

pub fn expm(m: &ArrayView2<f64>) -> Result<Matrix> {
    let n = ensure_square(m)?;
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("expm input has non-finite entries"));
    }
    if n == 0 {
        return Ok(Matrix::zeros((0, 0)));
    }
    let norm = norm1(m);
    for &(deg, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(&m.to_owned(), deg);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.mapv(|x| x * 2f64.powi(-s));
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

fn pade(a: &Matrix, m: usize) -> Result<Matrix> {
    let b = pade_coefficients(m);
    let n = a.nrows();
    let id = Matrix::eye(n);
    let a2 = a.dot(a);
    let (u, v) = if m < 13 {
        // Even powers A^0, A^2, …, A^{m-1}.
        let mut pows = vec![id.clone(), a2.clone()];
        while pows.len() < (m + 1) / 2 {
            let next = pows.last().unwrap().dot(&a2);
            pows.push(next);
        }
        let mut u = Matrix::zeros((n, n));
        let mut v = Matrix::zeros((n, n));
        for (k, p) in pows.iter().enumerate() {
            u.scaled_add(b[2 * k + 1], p);
            v.scaled_add(b[2 * k], p);
        }
        (a.dot(&u), v)
    } else {
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
        let u = a.dot(&(a6.dot(&inner_u) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]));
        let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
        let v = a6.dot(&inner_v) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
        (u, v)
    };
    let p = &v + &u;
    let q = &v - &u;
    lu_solve(&q.view(), &p.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_gives_identity() {
        let z = Matrix::zeros((3, 3));
        assert_eq!(expm(&z.view()).unwrap(), Matrix::eye(3));
    }

    #[test]
    fn diagonal() {
        let d = array![[1.0, 0.0], [0.0, -1.0]];
        let e = expm(&d.view()).unwrap();
        assert!((e[[0, 0]] - 1f64.exp()).abs() < 1e-15);
        assert!((e[[1, 1]] - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(e[[0, 1]], 0.0);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let n = array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        for scale in [1e-3, 0.5, 3.0, 40.0] {
            let e = expm(&(&n * scale).view()).unwrap();
            let expected = array![
                [1.0, scale, scale * scale / 2.0],
                [0.0, 1.0, scale],
                [0.0, 0.0, 1.0]
            ];
            for (x, y) in e.iter().zip(expected.iter()) {
                assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0), "{scale}: {x} {y}");
            }
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 2.5;
        let g = array![[0.0, -t], [t, 0.0]];
        let e = expm(&g.view()).unwrap();
        assert!((e[[0, 0]] - t.cos()).abs() < 1e-14);
        assert!((e[[1, 0]] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        let m = Matrix::zeros((2, 3));
        assert!(matches!(expm(&m.view()), Err(Error::NotSquare { .. })));
    }
}
