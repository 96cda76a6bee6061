use nambukit::parse;
use proptest::prelude::*;

const SESSIONS: [&str; 4] = [
    include_str!("../sessions/examples.nk"),
    include_str!("../sessions/gauge.nk"),
    include_str!("../sessions/canonicity.nk"),
    include_str!("../sessions/higher_order.nk"),
];

fn check(src: &str) {
    let s = parse(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let text = s.render();
    let again = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(again, s, "\n{text}");
    assert_eq!(again.render(), text);
}

#[test]
fn shipped_sessions_round_trip() {
    for src in SESSIONS {
        check(src);
    }
}

fn scalar() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("z".to_string()),
        Just("c".to_string()),
        (0u8..10).prop_map(|k| k.to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), 0u8..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("({a})/(1 + x^2)")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_sessions_round_trip(a in scalar(), b in scalar(), c in scalar()) {
        let src = format!(
            "chart x y z;\nparam c;\nfn f = {a};\nnambu P order 2 = ({b})*Dx^Dy;\nform B = ({c})*dx^dz;\n\
             bracket P {a}, {b} expect {c};\nhamiltonian P ({c});\nsharp P ({a})*dx;\ngauge P by B as G;\n"
        );
        check(&src);
    }
}
