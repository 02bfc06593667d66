use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigma3::identities::psi_symbolic;
use sigma3::{Curve, CurveFunction};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stock() -> [(&'static str, Curve, [i64; 7]); 2] {
    [
        ("x7p1", Curve::x7_plus_1(), [1, 0, 0, 0, 0, 0, 0]),
        // x(x^2-1)(x^2-4)(x^2-9) = x^7 - 14x^5 + 49x^3 - 36x
        ("real7", Curve::real_seven_roots(), [0, -36, 0, 49, 0, -14, 0]),
    ]
}

#[test]
fn symbolic_psi_is_bit_identical_to_golden() {
    for (tag, curve, _) in stock() {
        for n in [4, 5] {
            let text = format!("{}\n", psi_symbolic(n, &curve).unwrap());
            assert_eq!(text, golden(&format!("psi{n}_{tag}.txt")), "psi_{n} on {tag}");
        }
    }
}

// Independent oracle: polynomials in x with f64 coefficients, functions a + b y, the
// derivation d/du1 written out by hand, and a permutation-expansion determinant.

type Poly = Vec<Complex64>;

fn deriv(p: &Poly) -> Poly {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

fn pmul(p: &Poly, q: &Poly) -> Poly {
    if p.is_empty() || q.is_empty() {
        return vec![];
    }
    let mut out = vec![Complex64::default(); p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (k, b) in q.iter().enumerate() {
            out[i + k] += a * b;
        }
    }
    out
}

fn padd(p: &Poly, q: &Poly) -> Poly {
    (0..p.len().max(q.len()))
        .map(|i| p.get(i).copied().unwrap_or_default() + q.get(i).copied().unwrap_or_default())
        .collect()
}

fn peval(p: &Poly, x: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::default(), |acc, c| acc * x + c)
}

/// d/du1 of a + b y, using dx/du1 = 2y and dy/du1 = f'(x).
fn d1(a: &Poly, b: &Poly, f: &Poly) -> (Poly, Poly) {
    let two = Complex64::new(2.0, 0.0);
    let bb = deriv(b).iter().map(|c| c * two).collect::<Poly>();
    (padd(&pmul(&bb, f), &pmul(b, &deriv(f))), deriv(a).iter().map(|c| c * two).collect())
}

fn permutation_det(m: &[Vec<Complex64>]) -> Complex64 {
    fn rec(m: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>, sign: f64) -> Complex64 {
        if row == m.len() {
            return Complex64::new(sign, 0.0);
        }
        let mut acc = Complex64::default();
        for c in 0..m.len() {
            if used[c] {
                continue;
            }
            // inversions added by placing column c after the used ones
            let inv = used[c + 1..].iter().filter(|&&u| u).count();
            used[c] = true;
            let s = if inv % 2 == 0 { sign } else { -sign };
            acc += m[row][c] * rec(m, row + 1, used, s);
            used[c] = false;
        }
        acc
    }
    rec(m, 0, &mut vec![false; m.len()], 1.0)
}

fn oracle_psi(n: usize, lambda: [i64; 7], x: Complex64, y: Complex64) -> Complex64 {
    let mut f: Poly = lambda.iter().map(|&l| Complex64::new(l as f64, 0.0)).collect();
    f.push(Complex64::new(1.0, 0.0));
    // non-constant monomials by pole order: x, x^2, x^3, y, x^4, ...
    let cols: Vec<(Poly, Poly)> = [(1, false), (2, false), (3, false), (0, true)]
        .iter()
        .take(n - 1)
        .map(|&(e, is_y)| {
            let mono: Poly = (0..=e).map(|k| Complex64::new(if k == e { 1.0 } else { 0.0 }, 0.0)).collect();
            if is_y { (vec![], mono) } else { (mono, vec![]) }
        })
        .collect();
    let mut rows = Vec::new();
    let mut cur = cols;
    for _ in 1..n {
        cur = cur.iter().map(|(a, b)| d1(a, b, &f)).collect();
        rows.push(cur.iter().map(|(a, b)| peval(a, x) + peval(b, x) * y).collect::<Vec<_>>());
    }
    let superfactorial: f64 = (1..n).map(|k| (1..=k).product::<usize>() as f64).product();
    permutation_det(&rows) / superfactorial
}

#[test]
fn golden_polynomials_agree_with_independent_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (tag, curve, lambda) in stock() {
        for n in [4, 5] {
            let psi: CurveFunction = golden(&format!("psi{n}_{tag}.txt")).parse().unwrap();
            for _ in 0..20 {
                let x = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let p = curve.point_over(x, 1);
                let want = oracle_psi(n, lambda, p.x, p.y);
                let got = psi.eval(&p).unwrap();
                assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0), "psi_{n} on {tag} at {x}: {got} vs {want}");
            }
        }
    }
}
