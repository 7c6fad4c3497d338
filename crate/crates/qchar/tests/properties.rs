use proptest::prelude::*;
use qchar::characters::{lattice_character, minimal_character, minimal_data};
use qchar::qseries::QSeries;
use qchar::rat::{r, ri, Rat};
use qchar::ucpf::{ucpf_series, UcpfSpec};
use qchar::verify::*;
use qchar::RatS;

fn arb_eta() -> impl Strategy<Value = ExprNode> {
    prop::collection::vec((1i64..5, -3i64..4), 1..4).prop_map(|f| ExprNode::eta(&f))
}

fn arb_expr() -> impl Strategy<Value = ExprNode> {
    arb_eta().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            (inner.clone(), -3i64..4).prop_map(|(e, c)| e.scaled(ri(c))),
            (inner.clone(), 0i64..3, 1i64..4).prop_map(|(e, a, b)| e.shifted(r(a, b))),
            prop::collection::vec(inner.clone(), 1..3).prop_map(ExprNode::sum),
            prop::collection::vec(inner, 1..3).prop_map(|factors| ExprNode::Product { factors }),
        ]
    })
}

/// Coefficients of ∏_{n≥0} 1/((1−q^{5n+1})(1−q^{5n+4})) below q^t, by repeated
/// geometric-series multiplication.
fn rogers_ramanujan(t: usize) -> Vec<i64> {
    let mut c = vec![0i64; t];
    c[0] = 1;
    for part in (1..t).filter(|k| k % 5 == 1 || k % 5 == 4) {
        for i in part..t {
            c[i] += c[i - part];
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluation_is_prefix_stable(e in arb_expr(), t0 in 1i64..6, dt in 1i64..5) {
        let hi = evaluate(&e, &ri(t0 + dt)).unwrap();
        let lo = evaluate(&e, &ri(t0)).unwrap();
        prop_assert!(lo.agrees_to(&hi, &ri(t0)));
        // and a second request is answered identically
        prop_assert_eq!(evaluate(&e, &ri(t0)).unwrap(), lo);
    }

    #[test]
    fn corpus_round_trip(lhs in arb_expr(), rhs in arb_expr(), t in 1i64..30) {
        let case = IdentityCase::new("prop/case", lhs, rhs, ri(t), "random expression", &["prop"]);
        let text = corpus_to_string(std::slice::from_ref(&case));
        let back = parse_corpus(&text).unwrap();
        prop_assert_eq!(back, vec![case]);
    }

    #[test]
    fn series_json_round_trip(pairs in prop::collection::vec((-5i64..20, 1i64..6, -9i64..10), 0..8), t in 20i64..25) {
        let s = QSeries::from_pairs(pairs.iter().map(|&(a, b, c)| (r(a, b), ri(c))), Some(ri(t)));
        let v = s.to_json();
        prop_assert_eq!(QSeries::from_json(&v).unwrap(), s.clone());
        let text = serde_json::to_string(&v).unwrap();
        let again = serde_json::to_string(&QSeries::from_json(&serde_json::from_str(&text).unwrap()).unwrap().to_json()).unwrap();
        prop_assert_eq!(text, again);
    }

    #[test]
    fn rationals_serialise_as_fractions(n in -1000i64..1000, d in 1i64..1000) {
        let x = RatS(r(n, d));
        let text = serde_json::to_string(&x).unwrap();
        prop_assert!(text.contains('/'));
        prop_assert_eq!(serde_json::from_str::<RatS>(&text).unwrap(), x);
    }

    #[test]
    fn perturbation_is_located(e in arb_eta(), at in 0i64..8, by in prop::sample::select(vec![-2i64, -1, 1, 3])) {
        let t = ri(8);
        let case = IdentityCase::new("p", e.clone().perturbed(ri(at), ri(by)), e, t, "perturbed copy", &[]);
        let rep = check_identity(&case);
        prop_assert!(!rep.pass);
        let m = rep.first_mismatch.unwrap();
        prop_assert_eq!(m.exponent.0, ri(at));
        prop_assert_eq!(m.lhs.0 - m.rhs.0, ri(by));
    }

    #[test]
    fn lattice_shift_periodic(v in -2i64..3, a in 0i64..3, sign in prop::bool::ANY) {
        let t = ri(6);
        let a2 = vec![vec![ri(2), ri(-1)], vec![ri(-1), ri(2)]];
        let s = r(a, 3);
        let base = lattice_character(&a2, &ri(1), &[s.clone(), Rat::from_integer(0.into())], &t).unwrap();
        // translating by a lattice vector or negating the shift leaves θ unchanged
        let moved = lattice_character(&a2, &ri(1), &[&s + ri(v), ri(v)], &t).unwrap();
        prop_assert_eq!(&moved, &base);
        if sign {
            let neg = lattice_character(&a2, &ri(1), &[-s, ri(0)], &t).unwrap();
            prop_assert_eq!(neg, base);
        }
    }

    #[test]
    fn minimal_characters_start_at_h_minus_c_over_24(m in 1i64..5, rr in 1i64..6, s in 1i64..7) {
        prop_assume!(rr <= m + 1 && s <= m + 2);
        let (c, h) = minimal_data(m, rr, s).unwrap();
        let t = h.floor() + ri(2);
        let ch = minimal_character(m, rr, s, &t).unwrap();
        let (e, lead) = ch.leading().unwrap();
        prop_assert_eq!(e, h - c / ri(24));
        prop_assert_eq!(lead, ri(1));
        prop_assert!(ch.is_integral());
    }

    #[test]
    fn single_fermionic_sum_is_rogers_ramanujan(t in 2usize..40) {
        let spec = UcpfSpec::new(vec![vec![ri(2)]]).with_a(vec![ri(0)]);
        let s = ucpf_series(&spec, &ri(t as i64)).unwrap();
        let want = rogers_ramanujan(t);
        for (k, c) in want.iter().enumerate() {
            prop_assert_eq!(s.coeff(&ri(k as i64)), ri(*c), "q^{}", k);
        }
    }
}
