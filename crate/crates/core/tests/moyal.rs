use ndarray::Array2;
use num_complex::Complex64;
use phaselab::moyal::{moyal_bracket, poisson_bracket, star_product_poly, PolynomialSymbol};
use proptest::prelude::*;

/// Oscillator-basis truncation; entries within `VALID` of the origin are unaffected by it
/// for products up to degree `DIM - VALID`.
const DIM: usize = 64;
const VALID: usize = 40;

type Matrix = Array2<Complex64>;

fn position_and_momentum() -> (Matrix, Matrix) {
    let mut a = Matrix::zeros((DIM, DIM));
    for n in 1..DIM {
        a[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.t().mapv(|z| z.conj());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad).mapv(|z| z * s);
    let p = (&ad - &a).mapv(|z| z * Complex64::new(0.0, s));
    (q, p)
}

fn power(m: &Matrix, k: u32) -> Matrix {
    (0..k).fold(Matrix::eye(DIM), |acc, _| acc.dot(m))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weyl ordering of `q^j p^k` as `2^{-j} Σ_l C(j,l) Q^l P^k Q^{j-l}`.
fn weyl(poly: &PolynomialSymbol, q: &Matrix, p: &Matrix) -> Matrix {
    let mut out = Matrix::zeros((DIM, DIM));
    for ((j, k), c) in poly.terms() {
        let pk = power(p, k);
        for l in 0..=j {
            let term = power(q, l).dot(&pk).dot(&power(q, j - l));
            out.scaled_add(Complex64::new(c * binomial(j, l) / 2f64.powi(j as i32), 0.0), &term);
        }
    }
    out
}

fn block_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for m in 0..VALID {
        for n in 0..VALID {
            worst = worst.max((a[[m, n]] - b[[m, n]]).norm());
        }
    }
    worst
}

fn poly(terms: &[((u32, u32), f64)]) -> PolynomialSymbol {
    PolynomialSymbol::new(terms.iter().copied()).unwrap()
}

#[test]
fn bracket_matches_matrix_commutator() {
    let (q, p) = position_and_momentum();
    let pairs = [
        (poly(&[((4, 0), 1.0)]), poly(&[((0, 3), 1.0)])),
        (poly(&[((0, 2), 0.5), ((2, 0), -1.0), ((4, 0), 0.05)]), poly(&[((2, 1), 1.0)])),
        (poly(&[((3, 2), 1.0), ((1, 0), 2.0)]), poly(&[((1, 3), -0.5), ((2, 2), 1.0)])),
    ];
    for (a, b) in &pairs {
        let (ma, mb) = (weyl(a, &q, &p), weyl(b, &q, &p));
        // [Â, B̂]/(iħ) with ħ = 1.
        let commutator = (ma.dot(&mb) - mb.dot(&ma)).mapv(|z| z / Complex64::i());
        let bracket = moyal_bracket(a, b, 1.0).unwrap();
        let d = block_diff(&commutator, &weyl(&bracket.sum(), &q, &p));
        assert!(d < 1e-8, "{a:?} {b:?}: {d}");
    }
}

#[test]
fn quartic_cubic_correction_is_the_constant_term() {
    // {{q⁴, p³}} = 12 q³ p² − 6ħ² q.
    let b = moyal_bracket(&poly(&[((4, 0), 1.0)]), &poly(&[((0, 3), 1.0)]), 0.7).unwrap();
    let expected = poly(&[((3, 2), 12.0), ((1, 0), -6.0 * 0.49)]);
    assert!(b.sum().max_coefficient_diff(&expected) < 1e-12);
    assert!(b.poisson().max_coefficient_diff(&poly(&[((3, 2), 12.0)])) < 1e-12);
}

#[test]
fn star_product_matches_operator_product() {
    let (q, p) = position_and_momentum();
    let a = poly(&[((2, 1), 1.0), ((0, 2), -0.3)]);
    let b = poly(&[((1, 2), 0.5), ((3, 0), 1.0)]);
    let star = star_product_poly(&a, &b, 1.0, 6).unwrap();
    let product = weyl(&a, &q, &p).dot(&weyl(&b, &q, &p));
    let symbol = weyl(&star.re, &q, &p) + weyl(&star.im, &q, &p).mapv(|z| z * Complex64::i());
    let d = block_diff(&product, &symbol);
    assert!(d < 1e-8, "{d}");
}

fn small_polynomial() -> impl Strategy<Value = PolynomialSymbol> {
    prop::collection::vec(((0u32..=3, 0u32..=3), -2.0..2.0_f64), 1..5).prop_map(|terms| PolynomialSymbol::new(terms).unwrap())
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(a in small_polynomial(), b in small_polynomial(), hbar in 0.1..2.0_f64) {
        let ab = moyal_bracket(&a, &b, hbar).unwrap().sum();
        let ba = moyal_bracket(&b, &a, hbar).unwrap().sum();
        prop_assert!(ab.add(&ba).max_coefficient_diff(&PolynomialSymbol::zero()) < 1e-9);
    }

    #[test]
    fn bracket_with_a_quadratic_is_the_poisson_bracket(a in small_polynomial(), c in prop::array::uniform3(-2.0..2.0_f64)) {
        let h = poly(&[((2, 0), c[0]), ((1, 1), c[1]), ((0, 2), c[2])]);
        let b = moyal_bracket(&a, &h, 0.9).unwrap();
        prop_assert!(b.correction().max_coefficient_diff(&PolynomialSymbol::zero()) < 1e-12);
        prop_assert!(b.sum().max_coefficient_diff(&poisson_bracket(&a, &h)) < 1e-12);
    }

    #[test]
    fn bracket_is_the_star_commutator(a in small_polynomial(), b in small_polynomial(), hbar in 0.1..2.0_f64) {
        let ab = star_product_poly(&a, &b, hbar, 6).unwrap();
        let ba = star_product_poly(&b, &a, hbar, 6).unwrap();
        // (A⋆B − B⋆A)/(iħ): the real parts cancel and the imaginary parts give the bracket.
        prop_assert!(ab.re.sub(&ba.re).max_coefficient_diff(&PolynomialSymbol::zero()) < 1e-9);
        let from_star = ab.im.sub(&ba.im).scale(1.0 / hbar);
        prop_assert!(from_star.max_coefficient_diff(&moyal_bracket(&a, &b, hbar).unwrap().sum()) < 1e-9);
    }
}
