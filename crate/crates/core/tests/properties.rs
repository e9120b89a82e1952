use finite_rmt::coeffring::{format_rational, parse_rational, ratio, CoeffPoly, Rational};
use finite_rmt::model::ModelExpr;
use finite_rmt::momentspace::{MomentKey, MomentVector, PairMomentKey, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=12).prop_map(|(a, b)| ratio(a, b))
}

fn coeff_poly() -> impl Strategy<Value = CoeffPoly> {
    prop::collection::vec((rational(), -3i32..=3, -3i32..=3), 0..5).prop_map(|terms| {
        terms
            .into_iter()
            .fold(CoeffPoly::zero(), |acc, (q, a, b)| acc + CoeffPoly::monomial(q, a, b))
    })
}

fn moment_key() -> impl Strategy<Value = MomentKey> {
    prop::collection::vec(1usize..=6, 0..5).prop_map(|parts| MomentKey::new(parts).unwrap())
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        rational().prop_map(Value::Exact),
        (-1e6f64..1e6).prop_map(Value::Approx),
        (-1e-9f64..1e-9).prop_map(Value::Approx),
    ]
}

proptest! {
    #[test]
    fn ring_axioms(p in coeff_poly(), q in coeff_poly(), r in coeff_poly()) {
        prop_assert_eq!(&p + &q, &q + &p);
        prop_assert_eq!(&p * &q, &q * &p);
        prop_assert_eq!(&(&p + &q) + &r, &p + &(&q + &r));
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
        prop_assert_eq!(&p * &(&q + &r), &(&p * &q) + &(&p * &r));
        prop_assert_eq!(&p + &CoeffPoly::zero(), p.clone());
        prop_assert_eq!(&p * &CoeffPoly::one(), p.clone());
        prop_assert!((&p - &p).is_zero());
        prop_assert!((&p + &(-&p)).is_zero());
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in coeff_poly(), q in coeff_poly(), n in 1u64..6, big_n in 1u64..6) {
        prop_assert_eq!((&p * &q).eval(n, big_n), p.eval(n, big_n) * q.eval(n, big_n));
        prop_assert_eq!((&p + &q).eval(n, big_n), p.eval(n, big_n) + q.eval(n, big_n));
    }

    #[test]
    fn coeff_poly_text_round_trip(p in coeff_poly()) {
        let back: CoeffPoly = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn rational_text_round_trip(q in rational()) {
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn moment_key_text_round_trip(k in moment_key()) {
        prop_assert_eq!(k.to_string().parse::<MomentKey>().unwrap(), k);
    }

    #[test]
    fn pair_key_text_round_trip(r in moment_key(), s in moment_key()) {
        let key = PairMomentKey::new(r, s);
        prop_assert_eq!(key.to_string().parse::<PairMomentKey>().unwrap(), key);
    }

    #[test]
    fn moment_vector_text_and_json_round_trip(w in 1usize..=4, vals in prop::collection::vec(value(), 16)) {
        let mut i = 0;
        let v: MomentVector = MomentVector::from_fn(w, |_| {
            i += 1;
            vals[(i - 1) % vals.len()].clone()
        });
        prop_assert_eq!(MomentVector::from_text(&v.to_text()).unwrap(), v.clone());
        let json: serde_json::Value = serde_json::from_str(&v.to_json().to_string()).unwrap();
        prop_assert_eq!(MomentVector::from_json(&json).unwrap(), v);
    }

    #[test]
    fn model_render_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = rng.random_range(1..=4);
        let cols = if rng.random_bool(0.5) { rows } else { rng.random_range(1..=4) };
        let expr = random_model(&mut rng, 3, rows, cols);
        let text = expr.to_string();
        let parsed = ModelExpr::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &expr);
        prop_assert_eq!(parsed.to_string(), text);
    }
}

fn random_sigma(rng: &mut ChaCha8Rng) -> Rational {
    [ratio(1, 1), ratio(1, 2), ratio(1, 3), ratio(3, 4), ratio(0, 1), ratio(5, 2)][rng.random_range(0..6)].clone()
}

fn random_leaf(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ModelExpr {
    let names = ["A", "B", "R1", "I", "sig_x"];
    match rng.random_range(0..3) {
        1 => ModelExpr::GaussComplex {
            n: rows,
            big_n: cols,
            sigma: random_sigma(rng),
        },
        2 if rows == cols => ModelExpr::GaussSelfAdjoint {
            n: rows,
            sigma: random_sigma(rng),
        },
        _ => ModelExpr::DeterministicRef {
            name: names[rng.random_range(0..names.len())].into(),
            rows,
            cols,
        },
    }
}

/// A dimensionally valid expression denoting a `rows x cols` matrix.
fn random_model(rng: &mut ChaCha8Rng, depth: usize, rows: usize, cols: usize) -> ModelExpr {
    if depth == 0 {
        return random_leaf(rng, rows, cols);
    }
    let square = rows == cols;
    let any = |rng: &mut ChaCha8Rng| rng.random_range(1..=4);
    match rng.random_range(0..if square { 6 } else { 3 }) {
        0 => random_leaf(rng, rows, cols),
        1 => ModelExpr::GaussSum(
            Box::new(random_model(rng, depth - 1, rows, cols)),
            Box::new(random_model(rng, depth - 1, rows, cols)),
        ),
        2 => {
            let inner = any(rng);
            ModelExpr::CorrProduct {
                r: Box::new(random_model(rng, depth - 1, rows, inner)),
                s: Box::new(random_model(rng, depth - 1, cols, cols)),
                n: rows,
                big_n: cols,
            }
        }
        3 => {
            let inner = any(rng);
            let factors = (0..rng.random_range(1..=3))
                .map(|_| ModelExpr::GaussComplex {
                    n: rows,
                    big_n: any(rng),
                    sigma: random_sigma(rng),
                })
                .collect();
            ModelExpr::Chain {
                base: Box::new(random_model(rng, depth - 1, rows, inner)),
                factors,
            }
        }
        4 => {
            let inner = any(rng);
            ModelExpr::SelfAdjProduct {
                r: Box::new(random_model(rng, depth - 1, rows, inner)),
                n: rows,
            }
        }
        _ => {
            let inner = any(rng);
            ModelExpr::SelfAdjSum {
                r: Box::new(random_model(rng, depth - 1, rows, inner)),
                n: rows,
                sigma: random_sigma(rng),
            }
        }
    }
}

const CORPUS: &[&str] = &[
    "det(D, 2x2)",
    "det(D, 2x5)",
    "det( D ,3 x 3 )",
    "gC(2, 3)",
    "gC(2, 3, 0.5)",
    "gC(4, 4, 1/3)",
    "gC(1, 1, 0)",
    "gSA(3)",
    "gSA(3, 2)",
    "gSA(2, 0.25)",
    "sum(det(D, 2x2), gC(2, 2))",
    "sum(det(D, 2x4), gC(2, 4, 0.5))",
    "sum(sum(det(A, 2x3), gC(2, 3)), gC(2, 3, 0.1))",
    "sum(gC(3, 2), gC(3, 2, 2))",
    "sum(wprod(det(R, 2x2), det(S, 3x3), 2, 3), gC(2, 3, 0.1))",
    "sum(wprod(det(R,2x2),det(I,4x4),2,4),gC(2,4,1/2))",
    "wprod(det(I, 2x2), det(I, 2x2), 2, 2)",
    "wprod(det(D, 2x2), det(E, 3x3), 2, 3)",
    "wprod(det(R, 4x4), det(I, 1x1), 4, 1)",
    "wprod(sum(det(A, 2x2), gC(2, 2)), det(I, 2x2), 2, 2)",
    "chain(det(D, 2x2), gC(2, 3))",
    "chain(det(D, 2x2), gC(2, 3), gC(2, 5, 0.5))",
    "chain(det(I, 3x3), gC(3, 3), gC(3, 4), gC(3, 2, 2))",
    "chain(wprod(det(R, 2x2), det(I, 2x2), 2, 2), gC(2, 2))",
    "saprod(det(D, 2x2), 2)",
    "saprod(det(R, 5x5), 5)",
    "saprod(gSA(2), 2)",
    "sasum(det(D, 2x2), 2)",
    "sasum(det(D, 2x2), 2, 0.5)",
    "sasum(det(0, 3x3), 3, 3/7)",
    "sasum(saprod(det(R, 2x2), 2), 2, 1.25)",
    "saprod(sasum(det(R, 3x3), 3), 3)",
    "chain(sasum(det(D, 2x2), 2), gC(2, 6))",
    "sum(det(Y_1, 3x6), gC(3, 6, 0.001))",
];

#[test]
fn corpus_render_round_trips() {
    assert!(CORPUS.len() >= 30);
    for script in CORPUS {
        let tree = ModelExpr::parse(script).unwrap_or_else(|e| panic!("{script}: {e}"));
        let rendered = tree.to_string();
        let again = ModelExpr::parse(&rendered).unwrap_or_else(|e| panic!("{rendered}: {e}"));
        assert_eq!(again, tree, "{script} rendered as {rendered}");
        assert_eq!(again.to_string(), rendered);
    }
}
