use std::collections::BTreeSet;

use capbench::dataset::{
    label_for, render_rebound_clause, render_shot_clause, sample_frame_indices, split_dataset, DatasetError,
    SampleLabel, SamplingMode, FRAMES_PER_SAMPLE,
};
use capbench::pbp::{classify_event, expand_player_name, EventCategory, KeywordTable, Outcome, ReboundSide, ShotKind};
use proptest::prelude::*;

/// The taxonomy written out as strings, independent of the label enum.
fn expected_label(kind: ShotKind, outcome: Outcome, side: Option<ReboundSide>) -> Option<&'static str> {
    let table: [(&str, &str, &str, &str); 3] = [
        ("2pt_jump", "2p-succ.", "2p-fail.-off.", "2p-fail.-def."),
        ("layup", "2p-layup-succ.", "2p-layup-fail.-off.", "2p-layup-fail.-def."),
        ("3pt_jump", "3p-succ.", "3p-fail.-off.", "3p-fail.-def."),
    ];
    let row = table.iter().find(|r| r.0 == kind.as_str()).unwrap();
    match (outcome, side) {
        (Outcome::Make, _) => Some(row.1),
        (Outcome::Miss, Some(ReboundSide::Offensive)) => Some(row.2),
        (Outcome::Miss, Some(ReboundSide::Defensive)) => Some(row.3),
        (Outcome::Miss, None) => None,
    }
}

#[test]
fn label_decision_table() {
    let mut seen = BTreeSet::new();
    for kind in ShotKind::ALL {
        for outcome in [Outcome::Make, Outcome::Miss] {
            for side in [None, Some(ReboundSide::Offensive), Some(ReboundSide::Defensive)] {
                let got = label_for(kind, outcome, side);
                match expected_label(kind, outcome, side) {
                    Some(want) => {
                        let label = got.unwrap();
                        assert_eq!(label.as_str(), want);
                        seen.insert(label);
                    }
                    None => assert!(matches!(got, Err(DatasetError::IncompleteEvent))),
                }
            }
        }
    }
    assert_eq!(seen.into_iter().collect::<Vec<_>>(), SampleLabel::ALL.to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn frame_sampling(len in 1u64..5000, seed in any::<u64>()) {
        for mode in [SamplingMode::Midpoint, SamplingMode::SeededRandom] {
            let f = sample_frame_indices(len, FRAMES_PER_SAMPLE, mode, seed);
            prop_assert_eq!(f.len(), FRAMES_PER_SAMPLE);
            prop_assert!(f.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(f.iter().all(|&x| x < len));
            // one pick per equal segment [i·L/72, (i+1)·L/72)
            for (i, &x) in f.iter().enumerate() {
                let i = i as u64;
                let lo = i * len / 72;
                let hi = ((i + 1) * len).div_ceil(72);
                prop_assert!(x >= lo && x <= hi.max(lo), "frame {x} outside segment {i} [{lo}, {hi}]");
            }
            prop_assert_eq!(&f, &sample_frame_indices(len, FRAMES_PER_SAMPLE, mode, seed));
        }
        let mid = sample_frame_indices(len, FRAMES_PER_SAMPLE, SamplingMode::Midpoint, seed);
        for (i, &x) in mid.iter().enumerate() {
            let exact = (2.0 * i as f64 + 1.0) * len as f64 / 144.0;
            prop_assert_eq!(x, exact.floor() as u64);
        }
    }

    #[test]
    fn split_is_an_order_preserving_partition(n in 0usize..400, f in 0.01f64..0.99, seed in any::<u64>()) {
        let items: Vec<usize> = (0..n).collect();
        let (train, test) = split_dataset(&items, f, seed).unwrap();
        prop_assert_eq!(train.len(), (f * n as f64).round() as usize);
        prop_assert_eq!(train.len() + test.len(), n);
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(test.windows(2).all(|w| w[0] < w[1]));
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        prop_assert_eq!(all.len(), n);
    }

    #[test]
    fn rendered_clauses_classify_back(
        first in "[A-Z][a-z]{2,8}",
        last in "[A-Z][a-z]{2,10}",
        kind in 0usize..3,
        make in any::<bool>(),
        offensive in any::<bool>(),
    ) {
        let table = KeywordTable::default();
        let name = format!("{first} {last}");
        let outcome = if make { Outcome::Make } else { Outcome::Miss };
        let shot = render_shot_clause(&name, outcome, ShotKind::ALL[kind], Some("Ann Lee"));
        prop_assert_eq!(classify_event(&shot, &table).unwrap(), EventCategory::Shot);
        let side = if offensive { ReboundSide::Offensive } else { ReboundSide::Defensive };
        let rebound = render_rebound_clause(&name, side);
        prop_assert_eq!(classify_event(&rebound, &table).unwrap(), EventCategory::Rebound);
    }

    #[test]
    fn abbreviated_names_expand(names in prop::collection::btree_set(("[A-Z][a-z]{1,6}", "[A-Z][a-z]{2,8}"), 1..12), pick in any::<prop::sample::Index>()) {
        let roster: Vec<String> = names.iter().map(|(f, l)| format!("{f} {l}")).collect();
        let (f, l) = names.iter().nth(pick.index(names.len())).unwrap();
        let surface = format!("{}. {l}", &f[..1]);
        let clashes = names.iter().filter(|(f2, l2)| f2[..1] == f[..1] && l2.to_lowercase() == l.to_lowercase()).count();
        let got = expand_player_name(&surface, &roster);
        if clashes == 1 {
            prop_assert_eq!(got.unwrap(), format!("{f} {l}"));
        } else {
            prop_assert!(got.is_err());
        }
        prop_assert_eq!(expand_player_name(&format!("{f} {l}"), &roster).unwrap(), format!("{f} {l}"));
    }
}
