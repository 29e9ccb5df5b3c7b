use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;

use plwhile::dist::{dist_eq, ratio, Dist};
use plwhile::frontend::{parse, print_assertion, print_expr};
use plwhile::lang::Expr;
use plwhile::relational::{lift_check, Assertion};

/// A sub-distribution over `0..3` from raw weights, scaled to `mass/4`.
fn dist_from(raw: &[u8], mass: i64) -> Dist<u8> {
    let total: i64 = raw.iter().map(|w| *w as i64).sum();
    if total == 0 {
        return Dist::empty();
    }
    Dist::from_weights(raw.iter().enumerate().map(|(i, w)| (i as u8, ratio(*w as i64, total) * ratio(mass, 4))))
}

fn arb_dist() -> impl Strategy<Value = Dist<u8>> {
    (prop::collection::vec(0u8..5, 3), 1i64..=4).prop_map(|(raw, m)| dist_from(&raw, m))
}

/// A kernel `u8 -> Dist<u8>` given by a table of raw weights per input.
fn arb_kernel() -> impl Strategy<Value = Vec<Dist<u8>>> {
    prop::collection::vec(arb_dist(), 3)
}

fn bool_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Bool(true)),
        Just(Expr::Bool(false)),
        Just(Expr::Eq(Box::new(Expr::name("x")), Box::new(Expr::name("x0")))),
        Just(Expr::Eq(Box::new(Expr::name("x")), Box::new(Expr::name("y")))),
        Just(Expr::dom("t", Expr::name("y"))),
        Just(Expr::Eq(Box::new(Expr::proj(1, Expr::lookup("t", Expr::name("x")))), Box::new(Expr::name("y0")))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Eq(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #[test]
    fn weights_stay_reduced(d in arb_dist(), k in arb_kernel()) {
        let out = d.bind(|x| k[*x as usize].clone());
        for (_, w) in out.iter() {
            prop_assert!(*w > ratio(0, 1));
            prop_assert!(w.numer().gcd(w.denom()).is_one());
        }
        prop_assert!(out.is_subprob());
    }

    #[test]
    fn bind_never_adds_mass(d in arb_dist(), k in arb_kernel()) {
        let out = d.bind(|x| k[*x as usize].clone());
        prop_assert!(out.mass() <= d.mass());
        let lossless = d.support().iter().all(|x| k[*x as usize].mass().is_one());
        prop_assert_eq!(out.mass() == d.mass(), lossless || d.mass().is_zero());
    }

    #[test]
    fn bind_is_associative(d in arb_dist(), f in arb_kernel(), g in arb_kernel()) {
        let lhs = d.bind(|x| f[*x as usize].clone()).bind(|y| g[*y as usize].clone());
        let rhs = d.bind(|x| f[*x as usize].bind(|y| g[*y as usize].clone()));
        prop_assert!(dist_eq(&lhs, &rhs));
        // Direct double sum.
        for z in 0u8..3 {
            let mut w = ratio(0, 1);
            for (x, p) in d.iter() {
                for (y, q) in f[*x as usize].iter() {
                    w += p * q * g[*y as usize].weight(&z);
                }
            }
            prop_assert_eq!(lhs.weight(&z), w);
        }
    }

    #[test]
    fn lifting_is_symmetric(d1 in arb_dist(), d2 in arb_dist(), bits in 0u16..512) {
        let rel = |a: &u8, b: &u8| bits >> (3 * a + b) & 1 == 1;
        prop_assert_eq!(lift_check(&d1, &d2, rel), lift_check(&d2, &d1, |b, a| rel(a, b)));
    }

    #[test]
    fn full_relation_lifts_iff_masses_agree(d1 in arb_dist(), d2 in arb_dist()) {
        prop_assert_eq!(lift_check(&d1, &d2, |_, _| true), d1.mass() == d2.mass());
    }

    #[test]
    fn lifting_is_monotone(d1 in arb_dist(), d2 in arb_dist(), bits in 0u16..512, extra in 0u16..512) {
        let small = |a: &u8, b: &u8| bits >> (3 * a + b) & 1 == 1;
        let big = |a: &u8, b: &u8| (bits | extra) >> (3 * a + b) & 1 == 1;
        prop_assert!(!lift_check(&d1, &d2, small) || lift_check(&d1, &d2, big));
    }

    #[test]
    fn expressions_round_trip(e in bool_expr()) {
        let src = format!(
            "type X = {{x0, x1}}; type Y = {{y0, y1}};
             goal g {{ vars x: X, y: X, t: X -> lab Y; left {{ }} right {{ }} pre test@1({}); post true; }}",
            print_expr(&e)
        );
        let f = parse(&src).map_err(|err| TestCaseError::fail(format!("{err}\n{src}")))?;
        prop_assert_eq!(&f.goals[0].pre, &Assertion::Test(plwhile::relational::Side::Left, e));
        let again = print_assertion(&f.goals[0].pre);
        prop_assert!(again.starts_with("test@1("));
    }
}
