use std::collections::{BTreeSet, HashSet};

use jobnet_core::corpus::{dedupe_and_resolve, parse_edition, validate_spelling, GrammarConfig};
use proptest::prelude::*;

const PAGE: &str = include_str!("fixtures/page_20.txt");

struct Expected {
    title: &'static str,
    alt: &'static [&'static str],
    industries: &'static [&'static str],
    code: Option<&'static str>,
    description: &'static str,
    references: &'static [&'static str],
}

const fn ex(
    title: &'static str,
    industries: &'static [&'static str],
    code: Option<&'static str>,
    description: &'static str,
) -> Expected {
    Expected {
        title,
        alt: &[],
        industries,
        code,
        description,
        references: &[],
    }
}

const fn reference(title: &'static str, industries: &'static [&'static str], references: &'static [&'static str]) -> Expected {
    Expected {
        title,
        alt: &[],
        industries,
        code: None,
        description: "",
        references,
    }
}

fn expected() -> Vec<Expected> {
    vec![
        ex(
            "ACCOUNTANT",
            &["profess. & kin."],
            Some("0-01.10"),
            "Applies principles of accounting to install and maintain operation of general accounting system.",
        ),
        ex("ACTOR", &["amuse. & rec."], Some("0-02.10"), "Portrays a role in a dramatic production."),
        ex(
            "BENCH-LATHE OPERATOR",
            &["mach. shop"],
            Some("4-76.210"),
            "A general term applied to a worker who operates a small lathe mounted on a workbench.",
        ),
        Expected {
            alt: &["CARTON MAKER"],
            ..ex("BOX MAKER", &["paper goods"], Some("8-04.07"), "Folds and glues cardboard into boxes by hand.")
        },
        reference("CARETAKER", &["any ind."], &["JANITOR"]),
        ex("CHAUFFEUR", &["domestic ser."], Some("2-04.01"), "Drives an automobile for a private family."),
        ex(
            "CLERK, GENERAL OFFICE",
            &["clerical"],
            Some("1-05.01"),
            "Performs a variety of clerical duties, such as filing, typing, and answering the telephone.",
        ),
        ex(
            "DRILL-PRESS OPERATOR",
            &["mach. shop", "woodworking"],
            Some("6-78.010"),
            "Operates a drill press to bore holes in metal or wood.",
        ),
        ex(
            "FARM HAND",
            &["agric."],
            Some("7-61.010"),
            "Performs general farm work. Plows, plants, and harvests crops.",
        ),
        ex("GLUER", &["paper goods"], Some("8-04.07"), "Folds and glues cardboard into boxes by hand."),
        reference("INSPECTOR", &["any ind."], &["EXAMINER", "TESTER"]),
        ex("JANITOR", &["any ind."], Some("2-84.10"), "Keeps hallways, rooms, and grounds clean."),
        reference("LATHE HAND", &["mach. shop"], &["BENCH-LATHE OPERATOR"]),
        ex("MANAGER, STORE", &["ret. tr."], Some("0-72.21"), "Directs the operation of a retail store."),
        ex("PAPER HANGER", &["const.", "paint."], Some("5-27.410"), "Covers walls with wallpaper."),
        ex("SCHOOL TEACHER", &["education"], Some("0-30.11"), "Teaches pupils in a public school."),
        reference("TAPER", &["const."], &["PAPER HANGER"]),
        ex("TUTOR", &["education"], Some("0-30.13"), "Instructs pupils individually."),
        ex("WELDER, ARC", &["welding"], Some("4-85.020"), "Welds metal parts by arc welding."),
        ex(
            "YARDMASTER",
            &["r.r. trans."],
            Some("0-97.82"),
            "Supervises the makeup of trains in a railroad yard.",
        ),
    ]
}

#[test]
fn twenty_entry_page_matches_hand_records() {
    let parsed = parse_edition(PAGE, 1939, &GrammarConfig::default()).unwrap();
    assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
    let entries = &parsed.corpus.entries;
    let want = expected();
    assert_eq!(entries.len(), want.len());
    for (i, (got, want)) in entries.iter().zip(&want).enumerate() {
        assert_eq!(got.id, format!("1939-{:05}", i + 1));
        assert_eq!(got.title, want.title);
        assert_eq!(got.alt_titles, want.alt, "{}", want.title);
        assert_eq!(got.industries, want.industries, "{}", want.title);
        assert_eq!(got.code.as_deref(), want.code, "{}", want.title);
        assert_eq!(got.description, want.description, "{}", want.title);
        assert_eq!(got.references, want.references, "{}", want.title);
        assert_eq!(&PAGE[got.span.start..got.span.start + want.title.len()], want.title);
    }
    assert_eq!(entries[8].line, 22);
}

#[test]
fn twenty_entry_page_dedupe() {
    let parsed = parse_edition(PAGE, 1939, &GrammarConfig::default()).unwrap();
    let stats = &parsed.corpus.stats;
    assert_eq!(stats.total_entries, 20);
    assert_eq!(stats.distinct_description_entries, 15);
    assert_eq!(stats.reference_entries, 4);
    assert_eq!(stats.coded_entries, 16);

    let d = dedupe_and_resolve(&parsed.corpus);
    assert_eq!(d.report.retained, 15);
    assert_eq!(d.report.removed_reference_only, 4);
    assert_eq!(d.report.removed_duplicates, 1);
    assert_eq!(d.report.removed_empty, 0);
    // INSPECTOR points at EXAMINER and TESTER, neither of which is defined
    assert_eq!(d.report.unresolved_references, 2);
    assert!(d.corpus.entries.iter().all(|e| e.title != "GLUER"));
}

#[test]
fn spelling_accuracy_with_seven_planted_errors() {
    let words = [
        "operates", "machine", "cuts", "metal", "parts", "according", "to", "specifications", "and", "cleans",
    ];
    let typos = ["operats", "machne", "metl", "acording", "specfications", "clens", "prts"];
    let lexicon: HashSet<String> = words.iter().map(|w| w.to_string()).collect();
    // 93 correct tokens and 7 misspellings across three entries
    let mut tokens: Vec<&str> = (0..93).map(|i| words[i % words.len()]).collect();
    for (k, t) in typos.iter().enumerate() {
        tokens.insert(k * 13 + 5, t);
    }
    assert_eq!(tokens.len(), 100);
    let text = format!(
        "LATHE HAND (mach. shop) {}.\n\nDRILLER (mach. shop) {}.\n\nCUTTER (mach. shop) {}.\n",
        tokens[..30].join(" "),
        tokens[30..70].join(" "),
        tokens[70..].join(" ")
    );
    let parsed = parse_edition(&text, 1949, &GrammarConfig::default()).unwrap();
    let report = validate_spelling(&parsed.corpus, &lexicon, 100).unwrap();
    assert_eq!(report.total_words, 100);
    assert_eq!(report.misspelled_count, 7);
    assert_eq!(report.accuracy_rate, 0.93);
    let flagged: BTreeSet<&str> = report.misspelled_samples.iter().map(|(t, _)| t.as_str()).collect();
    assert_eq!(flagged, typos.iter().copied().collect());
}

#[derive(Debug, Clone)]
enum Body {
    Description(usize),
    Reference(usize),
}

fn fuzz_corpus() -> impl Strategy<Value = Vec<Body>> {
    prop::collection::vec(
        prop_oneof![
            3 => (0usize..6).prop_map(Body::Description),
            1 => (0usize..30).prop_map(Body::Reference),
        ],
        1..40,
    )
}

const DESCRIPTIONS: [&str; 6] = [
    "Operates a lathe.",
    "Keeps records of accounts.",
    "Teaches pupils.",
    "Drives a truck over\n  established routes.",
    "Welds metal parts.",
    "Plans budgets.",
];

fn render(bodies: &[Body]) -> String {
    bodies
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let title = format!("JOB {}", jobnet_core::synthetic::pseudo_word(i));
            match b {
                Body::Description(d) => format!("{title} (any ind.) {}\n", DESCRIPTIONS[*d]),
                Body::Reference(r) => format!("{title} (any ind.) see JOB {}.\n", jobnet_core::synthetic::pseudo_word(*r)),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dedupe_is_idempotent_and_accounts_for_every_entry(bodies in fuzz_corpus()) {
        let parsed = parse_edition(&render(&bodies), 1965, &GrammarConfig::default()).unwrap();
        prop_assert_eq!(parsed.corpus.entries.len(), bodies.len());
        let once = dedupe_and_resolve(&parsed.corpus);
        let r = &once.report;
        prop_assert_eq!(r.input_entries, bodies.len());
        prop_assert_eq!(r.retained + r.removed_duplicates + r.removed_reference_only + r.removed_empty, r.input_entries);

        let distinct: HashSet<&str> = once.corpus.entries.iter().map(|e| e.description.as_str()).collect();
        prop_assert_eq!(distinct.len(), once.corpus.entries.len());
        let want_distinct: HashSet<usize> = bodies.iter().filter_map(|b| match b {
            Body::Description(d) => Some(*d),
            Body::Reference(_) => None,
        }).collect();
        prop_assert_eq!(r.retained, want_distinct.len());

        let twice = dedupe_and_resolve(&once.corpus);
        prop_assert_eq!(&twice.corpus.entries, &once.corpus.entries);
        prop_assert_eq!(twice.report.retained, once.report.retained);
        prop_assert_eq!(twice.report.removed_duplicates + twice.report.removed_reference_only + twice.report.removed_empty, 0);
    }
}
