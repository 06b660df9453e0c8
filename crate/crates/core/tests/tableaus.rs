use exprk::linalg::Matrix;
use exprk::phi::{build_phi_cache, phi_scalar, PhiMethod};
use exprk::tableaus::{
    exponential_euler, expk2, exprk6s15, exprk6s16, rational, weighted_node_moment, PhiPoly,
    Scheme, SCHEME_NAMES,
};
use num::{BigRational, ToPrimitive};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

fn f(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

fn dd(r: &BigRational) -> TwoFloat {
    let hi = f(r);
    let lo = f(&(r - BigRational::from_float(hi).unwrap()));
    TwoFloat::from(hi) + lo
}

/// Gaussian elimination with partial pivoting in double-double.
fn solve_dd(mut a: Vec<Vec<TwoFloat>>, mut b: Vec<TwoFloat>) -> Vec<TwoFloat> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| f64::from(a[x][col].abs()).total_cmp(&f64::from(a[y][col].abs())))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            for k in col..n {
                let t = a[col][k] * m;
                a[r][k] -= t;
            }
            let t = b[col] * m;
            b[r] -= t;
        }
    }
    let mut x = vec![TwoFloat::from(0.0); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= a[r][k] * x[k];
        }
        x[r] = acc / a[r][r];
    }
    x
}

/// Solves `Σ_k x_k c_k^{q-1}/(q-1)! = τ^q φ_q(τ z)`, `q = 2..=|src|+1`, for
/// the coupling of a target node `τ` to source nodes `src`.
fn vandermonde_oracle(src: &[BigRational], tau: &BigRational, z: f64) -> Vec<f64> {
    let m = src.len();
    let a = (0..m)
        .map(|r| {
            let q = r + 2;
            src.iter()
                .map(|c| dd(&(num::pow(c.clone(), q - 1) / fact(q - 1))))
                .collect()
        })
        .collect();
    let tz = f(tau) * z;
    let rhs = (0..m)
        .map(|r| {
            let q = r + 2;
            dd(&num::pow(tau.clone(), q)) * phi_scalar(q, tz)
        })
        .collect();
    solve_dd(a, rhs).into_iter().map(f64::from).collect()
}

fn fact(k: usize) -> BigRational {
    BigRational::from_integer((1..=k as i64).product::<i64>().into())
}

fn eval_dd(p: &PhiPoly, z: f64) -> f64 {
    let cz = f(&p.node) * z;
    let mut acc = TwoFloat::from(0.0);
    for (&j, w) in &p.terms {
        acc += dd(w) * phi_scalar(j, cz);
    }
    f64::from(acc)
}

fn check_coupling(s: &Scheme, z: f64) -> f64 {
    let mut worst = 0.0_f64;
    let mut compare = |p: &PhiPoly, oracle: f64| {
        let got = eval_dd(p, z);
        worst = worst.max((got - oracle).abs() / oracle.abs());
    };
    for (g, members) in s.groups.iter().enumerate().skip(1) {
        let src = &s.groups[g - 1];
        let cs: Vec<BigRational> = src.iter().map(|&j| s.node(j).clone()).collect();
        for &i in members {
            let oracle = vandermonde_oracle(&cs, s.node(i), z);
            for (k, &j) in src.iter().enumerate() {
                compare(&s.a[&(i, j)], oracle[k]);
            }
        }
    }
    let last = s.groups.last().unwrap();
    let cs: Vec<BigRational> = last.iter().map(|&j| s.node(j).clone()).collect();
    let oracle = vandermonde_oracle(&cs, &BigRational::from_integer(1.into()), z);
    for (k, &i) in last.iter().enumerate() {
        compare(&s.b[&i], oracle[k]);
    }
    worst
}

#[test]
fn coefficient_tables_match_vandermonde_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for s in [exprk6s15(), exprk6s16()] {
        for _ in 0..20 {
            let z = rng.random_range(-10.0..2.0);
            let worst = check_coupling(&s, z);
            assert!(worst <= 1e-12, "{} z = {z}: {worst:e}", s.name);
        }
    }
}

#[test]
fn schemes_validate_and_couple_only_to_previous_group() {
    for name in SCHEME_NAMES {
        let s = Scheme::by_name(name).unwrap();
        s.validate().unwrap();
        let group_of = |i: usize| s.groups.iter().position(|g| g.contains(&i)).unwrap();
        for &(i, j) in s.a.keys() {
            assert!(group_of(j) < group_of(i), "{name}: a_{i},{j}");
        }
        assert!(s.groups.len() + 1 <= 6);
    }
    assert!(Scheme::by_name("rk4").is_err());
}

#[test]
fn s15_structure() {
    let s = exprk6s15();
    assert_eq!(s.s, 15);
    let want = [
        (2, 1, 2), (3, 1, 2), (4, 1, 3), (5, 1, 2), (6, 1, 5), (7, 1, 4), (8, 18, 25),
        (9, 1, 3), (10, 3, 10), (11, 1, 6), (12, 90, 103), (13, 1, 3), (14, 3, 10), (15, 1, 5),
    ];
    for (i, p, q) in want {
        assert_eq!(*s.node(i), rational(p, q), "c_{i}");
    }
    assert_eq!(
        s.groups,
        vec![vec![2], vec![3, 4], vec![5, 6, 7], vec![8, 9, 10, 11], vec![12, 13, 14, 15]]
    );
    assert_eq!(s.cache_nodes().len(), 9);
    let cols: Vec<usize> = s.row(12).map(|(j, _)| j).collect();
    assert_eq!(cols, vec![8, 9, 10, 11]);
    assert_eq!(s.b.keys().copied().collect::<Vec<_>>(), vec![12, 13, 14, 15]);
    assert_eq!(weighted_node_moment(&s, 5), rational(1, 6));
    let float: f64 = s
        .b
        .iter()
        .map(|(&i, p)| p.eval_scalar(0.0) * s.node_f64(i).powi(5))
        .sum();
    assert!((float - 1.0 / 6.0).abs() <= 1e-12, "{float}");
    assert!((f(&s.b[&12].value_at_zero()) - 0.31342).abs() < 5e-6);
}

#[test]
fn s16_structure() {
    let s = exprk6s16();
    assert_eq!(s.s, 16);
    assert_eq!(*s.node(16), rational(1, 1));
    assert_eq!(s.cache_nodes().len(), 5);
    assert_eq!(s.groups.iter().map(Vec::len).max(), Some(5));
    assert_eq!(s.kmax(), 6);
    assert_eq!(weighted_node_moment(&s, 5), rational(1, 6));
    for q in 2..=6 {
        // Σ b_i(0) c_i^{q-1}/(q-1)! = 1/q!
        let lhs = weighted_node_moment(&s, q as u32 - 1) / fact(q - 1);
        assert_eq!(lhs, BigRational::from_integer(1.into()) / fact(q), "q = {q}");
    }
}

#[test]
fn baseline_structure() {
    let e = exponential_euler();
    assert_eq!(e.s, 1);
    assert!(e.b.is_empty());
    let k = expk2(rational(1, 2)).unwrap();
    assert_eq!(k.b[&2].terms.len(), 1);
    assert_eq!(k.b[&2].terms[&2], rational(2, 1));
    let k1 = Scheme::by_name("expk2").unwrap();
    assert_eq!(*k1.node(2), rational(1, 1));
}

#[test]
fn eval_coeff_examples() {
    let one = rational(1, 1);
    let p = PhiPoly::new(one.clone(), [(1, one.clone())].into());
    let cache = build_phi_cache(&Matrix::zeros((3, 3)).view(), 0.3, &[one.clone()], 1, PhiMethod::Auto).unwrap();
    assert_eq!(p.eval_coeff(&cache).unwrap(), Matrix::eye(3));
    let p2 = PhiPoly::new(rational(1, 2), [(1, one)].into());
    assert!(p2.eval_coeff(&cache).is_err());

    // Row values at zero reproduce the exact rationals.
    let s = exprk6s15();
    let zero = build_phi_cache(&Matrix::zeros((2, 2)).view(), 1.0, &s.cache_nodes(), 6, PhiMethod::Auto).unwrap();
    for p in s.a.values() {
        let m = p.eval_coeff(&zero).unwrap();
        assert!((m[[0, 0]] - f(&p.value_at_zero())).abs() <= 1e-12 * f(&p.value_at_zero()).abs().max(1.0));
        assert_eq!(m[[0, 1]], 0.0);
    }

    // Diagonal matrix: entrywise scalar evaluation.
    let d = Matrix::from_diag(&ndarray::arr1(&[-3.0, -0.5, 0.7]));
    let cache = build_phi_cache(&d.view(), 1.0, &s.cache_nodes(), 6, PhiMethod::Auto).unwrap();
    for p in s.a.values() {
        let m = p.eval_coeff(&cache).unwrap();
        for (k, &z) in [-3.0, -0.5, 0.7].iter().enumerate() {
            let want = p.eval_scalar(z);
            assert!((m[[k, k]] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}

#[test]
fn reports_match_golden_files() {
    for (s, file) in [
        (exprk6s15(), include_str!("golden/exprk6s15.txt")),
        (exprk6s16(), include_str!("golden/exprk6s16.txt")),
    ] {
        assert_eq!(s.report(), file, "{}", s.name);
    }
}
