mod common;

use proptest::prelude::*;

use seqmeas::examples::{build_duopoly, build_example, DuopolyParams, ExampleParams};
use seqmeas::format::{
    parse_document, parse_profile, parse_spec, write_measure, write_profile, write_spec, write_strategy,
};
use seqmeas::game::validate_game;
use seqmeas::measure::{induce_measure, Profile};
use seqmeas::random_game::{random_game, random_profile, random_spec, random_strategy, RandomGameOptions};
use seqmeas::Error;

const SMALL: &str = "\
# Ann picks, Bob sees a noisy signal
[periods]
active = [0, 1, 2]

[actions 0]
labels = [\"-\"]
nature = [1.0]

[actions 1]
labels = [\"L\", \"R\"]   # Ann

[actions 2]
labels = [\"L\", \"R\"]

[signals 2]
labels = [\"l\", \"r\"]

[density 2]
mask = [2]
values = [
  1.8, 0.2,   # after L
  0.2, 1.8
]

[payoff 1]
mask = [2, 4]
values = [2, 4, 1, 2]

[payoff 2]
mask = [2, 4]
values = [4, 2, 2, 1]
";

fn parse_error(text: &str) -> (usize, usize, String) {
    match parse_spec(text).unwrap_err() {
        Error::Parse { line, column, message } => (line, column, message),
        e => panic!("expected a parse error, got {e}"),
    }
}

#[test]
fn handwritten_spec_with_comments_and_defaults() {
    let spec = parse_spec(SMALL).unwrap();
    let g = validate_game(spec.clone()).unwrap();
    assert_eq!(g.players(), &[1, 2]);
    // omitted signals default to one label, omitted base measures to uniform
    assert_eq!(spec.signals[1].labels, vec!["-".to_string()]);
    assert_eq!(g.space(2).unwrap().mu[0], vec![0.5, 0.5]);
    let ex3 = validate_game(build_example(3, &ExampleParams { c: 0.9, ..ExampleParams::default() }).unwrap()).unwrap();
    let p = Profile::uniform(&g);
    for &pl in g.players() {
        let a = seqmeas::play::expected_payoff(&g, &p, pl).unwrap();
        let b = seqmeas::play::expected_payoff(&ex3, &Profile::uniform(&ex3), pl).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn builtin_specs_round_trip_exactly() {
    for k in 1..=5 {
        let s = build_example(k, &ExampleParams::default()).unwrap();
        let text = write_spec(&s);
        let back = parse_spec(&text).unwrap();
        assert_eq!(back, s, "example {k}");
        assert_eq!(write_spec(&back), text);
    }
    let d = build_duopoly(&DuopolyParams::default()).unwrap();
    assert_eq!(parse_spec(&write_spec(&d)).unwrap(), d);
}

#[test]
fn profiles_and_strategies_round_trip() {
    let mut rng = common::rng(41);
    for _ in 0..20 {
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let p = random_profile(&mut rng, &g, 0.3);
        assert_eq!(parse_profile(&g, &write_profile(&p)).unwrap(), p);
        // a strategy section is induced into its measure
        let mut text = String::new();
        let mut want = Vec::new();
        for &pl in g.players() {
            let b = random_strategy(&mut rng, &g, pl, 0.3);
            want.push(induce_measure(&g, &b).unwrap());
            text.push_str(&write_strategy(&b));
            text.push('\n');
        }
        assert_eq!(parse_profile(&g, &text).unwrap().measures, want);
        let doc = parse_document(&write_measure(&want[0])).unwrap();
        assert!(doc.game.is_none());
        assert_eq!(doc.measures, vec![want[0].clone()]);
    }
}

#[test]
fn profiles_are_validated_against_the_game() {
    let g = validate_game(parse_spec(SMALL).unwrap()).unwrap();
    let bad = "[measure 1]\nmass = [0.7, 0.7]\n";
    let e = parse_profile(&g, &format!("{bad}\n[measure 2]\nmass = [0.25, 0.25, 0.25, 0.25]\n")).unwrap_err();
    assert_eq!(e.code(), "MALFORMED_MEASURE");
    let missing = parse_profile(&g, "[measure 1]\nmass = [0.5, 0.5]\n").unwrap_err();
    assert_eq!(missing.code(), "INCOMPLETE_PROFILE");
    // a spec file holds no measures
    assert_eq!(parse_spec(&format!("{SMALL}\n{bad}")).unwrap_err().code(), "PARSE");
}

#[test]
fn errors_carry_line_and_column() {
    let (l, c, m) = parse_error("[periods]\nactive = [0, 1]\nfoo = 3\n");
    assert_eq!((l, c), (3, 1));
    assert!(m.contains("unknown key 'foo'"));
    let (l, _, m) = parse_error("[periodz]\n");
    assert_eq!(l, 1);
    assert!(m.contains("unknown section"));
    let (l, c, _) = parse_error("[periods]\nactive = [0, x]\n");
    assert_eq!((l, c), (2, 14));
    let (l, _, m) = parse_error("[periods]\nactive = [0, 1,\n");
    assert_eq!(l, 2);
    assert!(m.contains("unbalanced"));
    let (l, _, m) = parse_error("[periods]\nactive = [0, 1]\nactive = [0, 1]\n");
    assert_eq!(l, 3);
    assert!(m.contains("active"));
    let (l, _, _) = parse_error("[periods]\nactive = [0, 1]\n[periods]\nactive = [0, 1]\n");
    assert_eq!(l, 3);
    let (l, _, _) = parse_error("[periods]\nactive = [0, 1]\njust words\n");
    assert_eq!(l, 3);
    // errors in the middle of a multi-line value point at the offending line
    let (l, _, _) = parse_error("[periods]\nactive = [\n  0,\n  ?\n]\n");
    assert_eq!(l, 4);
}

#[test]
fn hash_inside_strings_is_not_a_comment() {
    let text = SMALL.replace("[\"L\", \"R\"]   # Ann", "[\"#L\", \"R\"]   # Ann");
    let spec = parse_spec(&text).unwrap();
    assert_eq!(spec.actions[1].labels[0], "#L");
    assert_eq!(parse_spec(&write_spec(&spec)).unwrap(), spec);
}

#[test]
fn parsed_but_invalid_games_fail_validation() {
    let text = SMALL.replace("1.8, 0.2,   # after L", "1.8, 0.3,");
    let spec = parse_spec(&text).unwrap();
    assert_eq!(validate_game(spec).unwrap_err().code(), "NORMALIZATION");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_specs_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let s = random_spec(&mut rng, &RandomGameOptions::default());
        let text = write_spec(&s);
        let back = parse_spec(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(write_spec(&back), text);
    }
}
