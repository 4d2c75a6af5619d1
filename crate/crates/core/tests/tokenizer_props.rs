mod common;

use dualsynth::brics::{fragment, FragmentParams};
use dualsynth::molgraph::{parse_smiles, random_smiles};
use dualsynth::tokenizer::{SourceKind, SpecialPairing, TokenClass, Vocab};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::corpus;

#[test]
fn corpus_and_fragments_round_trip() {
    let v = Vocab::standard();
    let p = FragmentParams::new(5, 1.5, 1).unwrap();
    for s in corpus() {
        let ts = v.tokenize(&s, SourceKind::Molecule).unwrap();
        assert_eq!(v.detokenize(&ts).unwrap(), s);
        let frags = fragment(&parse_smiles(&s).unwrap(), &p).unwrap().to_smiles();
        let ts = v.tokenize(&frags, SourceKind::FragmentSet).unwrap();
        assert_eq!(v.detokenize(&ts).unwrap(), frags);
        assert_eq!(v.payload_len(&ts), v.token_length(&frags).unwrap());
    }
}

#[test]
fn dot_components_are_framed() {
    let v = Vocab::standard();
    let ts = v.tokenize("CCO.CCN", SourceKind::Molecule).unwrap();
    let bom = v.id("<BOM>").unwrap();
    let eom = v.id("<EOM>").unwrap();
    assert_eq!(ts.tokens.iter().filter(|&&t| t == bom).count(), 2);
    assert_eq!(ts.tokens.iter().filter(|&&t| t == eom).count(), 2);
    assert_eq!(v.detokenize(&ts).unwrap(), "CCO.CCN");

    let paper = Vocab::standard().with_pairing(SpecialPairing::Paper);
    let ts = paper.tokenize("CCO", SourceKind::Molecule).unwrap();
    assert_eq!(paper.token(ts.tokens[0]), Some("<BOF>"));
}

#[test]
fn vocab_file_round_trip() {
    let v = Vocab::standard();
    let text = v.to_text();
    let back = Vocab::from_text(&text).unwrap();
    assert_eq!(back.len(), v.len());
    for (id, tok, class) in v.entries() {
        assert_eq!(back.token(id), Some(tok));
        assert_eq!(back.class(id), Some(class));
    }
    assert_eq!(back.count(TokenClass::Group), 180);
}

#[test]
fn unknown_id() {
    let v = Vocab::standard();
    let mut ts = v.tokenize("CCO", SourceKind::Molecule).unwrap();
    ts.tokens[1] = v.len() as u32 + 7;
    assert!(v.detokenize(&ts).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn random_serializations_round_trip(idx in 0usize..1198, seed in any::<u64>()) {
        let all = corpus();
        let m = parse_smiles(&all[idx % all.len()]).unwrap();
        let s = random_smiles(&m, &mut ChaCha8Rng::seed_from_u64(seed));
        let grouped = Vocab::standard();
        let plain = Vocab::build("").unwrap();
        let ts = grouped.tokenize(&s, SourceKind::Molecule).unwrap();
        prop_assert_eq!(grouped.detokenize(&ts).unwrap(), s.clone());
        prop_assert!(grouped.token_length(&s).unwrap() <= plain.token_length(&s).unwrap());
    }

    #[test]
    fn segmentation_is_deterministic(idx in 0usize..1198) {
        let all = corpus();
        let v = Vocab::standard();
        let s = &all[idx % all.len()];
        prop_assert_eq!(v.tokenize(s, SourceKind::Molecule).unwrap(), v.tokenize(s, SourceKind::Molecule).unwrap());
    }
}
