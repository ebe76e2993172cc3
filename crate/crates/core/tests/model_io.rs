mod common;

use common::{load, models_dir, random_models};
use eosym_core::model::{parse, render, DiagnosticKind, EventSource};
use proptest::prelude::*;

#[test]
fn fixtures_round_trip() {
    for name in common::FIXTURES {
        let doc = load(name);
        let text = doc.render();
        let again = parse(&text).unwrap_or_else(|e| panic!("{name}:\n{e}\n{text}"));
        assert_eq!(again.eos, doc.eos, "{name}");
        assert_eq!(again.initial, doc.initial, "{name}");
        assert_eq!(again.render(), text, "{name}: fixpoint after one render");
    }
}

#[test]
fn fixture_shapes() {
    let s8 = load("eos-s8.eos");
    assert_eq!(s8.initial.tokens().support_len(), 4);
    assert_eq!(s8.eos.events().len(), 1);

    let kitchen = load("kitchen.eos");
    let recipe = kitchen.eos.net_by_name("recipe").unwrap();
    for p in kitchen.eos.system().places() {
        assert_eq!(kitchen.eos.type_of(p), recipe);
    }
    assert_eq!(kitchen.events, EventSource::FromLabels { max_sync: 1 });
}

#[test]
fn random_models_round_trip() {
    for (seed, eos, mu) in random_models(100) {
        let text = render(&eos, &mu, EventSource::Explicit);
        let doc = parse(&text).unwrap_or_else(|e| panic!("seed {seed}:\n{e}\n{text}"));
        assert_eq!(doc.eos, eos, "seed {seed}");
        assert_eq!(doc.initial, mu, "seed {seed}");
    }
}

fn first_error(text: &str) -> (DiagnosticKind, usize, usize) {
    let err = parse(text).expect_err("should not parse");
    let d = &err.0[0];
    (d.kind, d.span.line, d.span.col)
}

#[test]
fn every_diagnostic_class_is_positioned() {
    let base = std::fs::read_to_string(models_dir().join("eos-s8.eos")).unwrap();
    let cases = [
        ("type p1 N1", "type p1 N9", DiagnosticKind::UnknownId),
        ("place p2", "place p1", DiagnosticKind::Duplicate),
        ("trans t1 pre a1 post b1", "trans t1 pre a1 + + post b1", DiagnosticKind::MalformedMultiset),
        ("p2[a1]", "p2[a2]", DiagnosticKind::TypeMismatch),
        ("event t {", "evnt t {", DiagnosticKind::Syntax),
        ("N2: t2 }", "N2: t1 }", DiagnosticKind::UnknownId),
    ];
    for (from, to, kind) in cases {
        assert!(base.contains(from), "{from}");
        let text = base.replacen(from, to, 1);
        let line = text
            .lines()
            .collect::<Vec<_>>()
            .iter()
            .rposition(|l| l.contains(to))
            .expect("mutated line")
            + 1;
        let (k, l, c) = first_error(&text);
        assert_eq!((k, l), (kind, line), "{to}");
        assert!(c >= 1 && c <= text.lines().nth(l - 1).unwrap().chars().count() + 1);
    }
}

#[test]
fn semantic_problems_are_reported() {
    // An idle event has to synchronise with the place's type.
    let text = "objectnet N\n place a\n trans u pre a post a\nend\nobjectnet M\n place b\n trans v pre b post b\nend\nsystemnet\n place p\n type p N\nend\nevents explicit\n event id@p { M: v }\nend\n";
    let (k, l, c) = first_error(text);
    assert_eq!((k, l, c), (DiagnosticKind::TypeMismatch, 14, 15));

    let text = "systemnet\n place p\n trans t pre p post p\nend\nevents explicit\n event t { }\n event t { }\nend\n";
    assert_eq!(first_error(text).0, DiagnosticKind::Duplicate);

    let text = "systemnet\n place p\nend\nevents from-labels max_sync=1\n";
    assert!(parse(text).is_ok());
}

fn mutate(text: &str, ops: &[(usize, u8, char)]) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for &(pos, op, c) in ops {
        if chars.is_empty() {
            chars.push(c);
            continue;
        }
        let i = pos % chars.len();
        match op % 3 {
            0 => {
                chars.remove(i);
            }
            1 => chars.insert(i, c),
            _ => chars[i] = c,
        }
    }
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn mutated_fixtures_never_panic(
        which in 0usize..3,
        ops in prop::collection::vec(
            (any::<usize>(), any::<u8>(), prop::sample::select(vec![
                ' ', '\n', '[', ']', '{', '}', '+', '\'', ':', ';', '=', '#', '0', '7', 'x', 'p', '•', '@',
            ])),
            1..6,
        ),
    ) {
        let base = std::fs::read_to_string(models_dir().join(common::FIXTURES[which])).unwrap();
        let text = mutate(&base, &ops);
        let lines = text.lines().count().max(1);
        match parse(&text) {
            Ok(doc) => {
                let again = parse(&doc.render()).unwrap();
                prop_assert_eq!(again.eos, doc.eos);
            }
            Err(e) => {
                prop_assert!(!e.0.is_empty());
                for d in &e.0 {
                    prop_assert!(d.span.line >= 1 && d.span.line <= lines);
                    prop_assert!(d.span.col >= 1);
                }
            }
        }
    }
}
