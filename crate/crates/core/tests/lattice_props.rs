mod common;

use common::{lattice, principals_of_size, proof_acts_for, random_delegations, random_principal, Valuations};
use nmifc::lattice::{flow_join, flow_meet, normalize, project, view, voice, Aspect, Delegation, Lattice, Principal};
use nmifc::syntax::parse_principal;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 3] = ["a", "b", "c"];

fn p(s: &str) -> Principal {
    parse_principal(s).unwrap()
}

fn arb_principal() -> impl Strategy<Value = Principal> {
    let leaf = prop_oneof![
        Just(Principal::atom("a")),
        Just(Principal::atom("b")),
        Just(Principal::atom("c")),
        Just(Principal::Top),
        Just(Principal::Bot),
    ];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|x| x.conf()),
            inner.clone().prop_map(|x| x.integ()),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x.and(y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x.or(y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| x.join(y)),
            (inner.clone(), inner).prop_map(|(x, y)| x.meet(y)),
        ]
    })
}

fn arb_lattice() -> impl Strategy<Value = Lattice> {
    prop_oneof![
        Just(lattice(&ATOMS, vec![])),
        Just(lattice(&ATOMS, vec![Delegation { who: "a".into(), acts_for: p("b") }])),
        Just(lattice(&ATOMS, vec![Delegation { who: "c".into(), acts_for: p("a & b^->") }])),
        Just(lattice(&ATOMS, vec![Delegation { who: "b".into(), acts_for: p("a | c") }])),
    ]
}

#[test]
fn oracles_agree_on_small_sweep() {
    let lat = lattice(&ATOMS, vec![]);
    let vals = Valuations::new(&lat);
    let mut memo = Vec::new();
    let small: Vec<Principal> = (1..=3).flat_map(|s| principals_of_size(&ATOMS, s, &mut memo)).collect();
    for x in &small {
        for y in &small {
            let got = lat.acts_for(x, y);
            assert_eq!(got, proof_acts_for(&lat, x, y), "proof search: {x} >= {y}");
            assert_eq!(got, vals.acts_for(x, y), "valuations: {x} >= {y}");
        }
    }
}

#[test]
fn oracles_agree_with_delegations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let lat = lattice(&ATOMS, random_delegations(&mut rng, &ATOMS, 2));
        let vals = Valuations::new(&lat);
        for _ in 0..10 {
            let x = random_principal(&mut rng, &ATOMS, 5);
            let y = random_principal(&mut rng, &ATOMS, 5);
            let got = lat.acts_for(&x, &y);
            assert_eq!(got, proof_acts_for(&lat, &x, &y), "{x} >= {y} under {:?}", lat.delegations());
            assert_eq!(got, vals.acts_for(&x, &y), "{x} >= {y} under {:?}", lat.delegations());
        }
    }
}

#[test]
fn named_examples() {
    let trust = lattice(&["T", "U"], vec![Delegation { who: "T".into(), acts_for: p("U") }]);
    assert!(trust.flows_to(&p("U^->"), &p("T^->")));
    assert!(trust.flows_to(&p("T^<-"), &p("U^<-")));
    assert!(!trust.flows_to(&p("T^->"), &p("U^->")));
    let empty = Lattice::empty();
    assert!(empty.acts_for(&Principal::Top, &p("alice")));
    assert!(empty.flows_to(&p("top^<-"), &p("alice^->")));
    assert_eq!(voice(&p("T^->")).to_string(), "T^<-");
    assert!(empty.equiv(&voice(&p("(A & B)^->")), &p("(A & B)^<-")));
    assert!(empty.equiv(&voice(&Principal::Bot), &p("bot^<-")));
    assert!(empty.equiv(&view(&p("T^<-")), &p("T^->")));
    assert!(empty.equiv(&view(&p("alice^-> & bob^<-")), &p("bob^->")));
    assert!(empty.equiv(&project(&p("a & b^<-"), Aspect::Conf), &p("a^->")));
    assert!(empty.equiv(&project(&Principal::Top, Aspect::Integ), &p("top^<-")));
}

#[test]
fn distributivity_holds() {
    let lat = Lattice::empty();
    assert!(lat.acts_for(&p("a & (b | c)"), &p("a & b | a & c")));
    assert!(lat.acts_for(&p("(a | b) & (a | c)"), &p("a | b & c")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn acts_for_is_a_preorder(lat in arb_lattice(), x in arb_principal(), y in arb_principal(), z in arb_principal()) {
        prop_assert!(lat.acts_for(&x, &x));
        if lat.acts_for(&x, &y) && lat.acts_for(&y, &z) {
            prop_assert!(lat.acts_for(&x, &z));
        }
    }

    #[test]
    fn top_and_bot_bound_everything(lat in arb_lattice(), x in arb_principal()) {
        prop_assert!(lat.acts_for(&Principal::Top, &x));
        prop_assert!(lat.acts_for(&x, &Principal::Bot));
    }

    #[test]
    fn conjunction_is_meet_of_authority(lat in arb_lattice(), x in arb_principal(), y in arb_principal(), z in arb_principal()) {
        let xy = x.clone().and(y.clone());
        prop_assert!(lat.acts_for(&xy, &x) && lat.acts_for(&xy, &y));
        prop_assert_eq!(lat.acts_for(&z, &xy), lat.acts_for(&z, &x) && lat.acts_for(&z, &y));
        let xoy = x.clone().or(y.clone());
        prop_assert!(lat.acts_for(&x, &xoy) && lat.acts_for(&y, &xoy));
        prop_assert_eq!(lat.acts_for(&xoy, &z), lat.acts_for(&x, &z) && lat.acts_for(&y, &z));
    }

    #[test]
    fn normal_form_is_equivalent(lat in arb_lattice(), x in arb_principal()) {
        let n = normalize(&x).to_principal();
        prop_assert!(lat.equiv(&x, &n));
        prop_assert_eq!(normalize(&n), normalize(&x));
    }

    #[test]
    fn flow_join_is_least_upper_bound(lat in arb_lattice(), x in arb_principal(), y in arb_principal(), z in arb_principal()) {
        let j = flow_join(&x, &y);
        prop_assert!(lat.flows_to(&x, &j) && lat.flows_to(&y, &j));
        prop_assert_eq!(lat.flows_to(&j, &z), lat.flows_to(&x, &z) && lat.flows_to(&y, &z));
        let m = flow_meet(&x, &y);
        prop_assert!(lat.flows_to(&m, &x) && lat.flows_to(&m, &y));
        prop_assert_eq!(lat.flows_to(&z, &m), lat.flows_to(&z, &x) && lat.flows_to(&z, &y));
    }

    #[test]
    fn flow_join_is_idempotent(lat in arb_lattice(), x in arb_principal()) {
        prop_assert!(lat.equiv(&flow_join(&x, &x), &x));
        prop_assert!(lat.equiv(&flow_meet(&Principal::Top.conf(), &x), &x));
    }

    #[test]
    fn projections(lat in arb_lattice(), x in arb_principal()) {
        for a in [Aspect::Conf, Aspect::Integ] {
            let px = project(&x, a);
            prop_assert!(lat.equiv(&project(&px, a), &px));
            prop_assert!(lat.equiv(&project(&px, a.opposite()), &Principal::Bot));
            prop_assert!(lat.acts_for(&x, &px));
        }
        let back = project(&x, Aspect::Conf).and(project(&x, Aspect::Integ));
        prop_assert!(lat.equiv(&back, &x));
    }

    #[test]
    fn voice_and_view_swap_aspects(x in arb_principal()) {
        let lat = Lattice::empty();
        let c = project(&x, Aspect::Conf);
        prop_assert!(lat.equiv(&view(&voice(&c)), &c));
        let i = project(&x, Aspect::Integ);
        prop_assert!(lat.equiv(&voice(&view(&i)), &i));
    }

    #[test]
    fn flows_to_decomposes(lat in arb_lattice(), x in arb_principal(), y in arb_principal()) {
        let by_parts = lat.acts_for(&project(&y, Aspect::Conf), &project(&x, Aspect::Conf))
            && lat.acts_for(&project(&x, Aspect::Integ), &project(&y, Aspect::Integ));
        prop_assert_eq!(lat.flows_to(&x, &y), by_parts);
    }

    #[test]
    fn printed_principals_reparse(x in arb_principal()) {
        let back = parse_principal(&x.to_string()).unwrap();
        prop_assert_eq!(normalize(&back), normalize(&x));
    }
}
