use morphseg::labels::{decode_bmes, encode_bmes};
use morphseg::SurfaceSegmentation;

#[test]
fn every_segmentation_up_to_length_ten_round_trips() {
    let alphabet = "abcdefghij";
    for n in 1..=10 {
        let word = &alphabet[..n];
        for mask in 0u32..(1 << (n - 1)) {
            let cuts: Vec<usize> = (1..n).filter(|b| mask & (1 << (b - 1)) != 0).collect();
            let seg = SurfaceSegmentation::new(word, cuts).unwrap();
            let labels = encode_bmes(&seg);
            assert!(labels.is_valid(), "{seg}");
            assert_eq!(decode_bmes(&labels, word).unwrap(), seg);
        }
    }
}

#[test]
fn every_legal_label_sequence_decodes_to_distinct_segmentations() {
    use morphseg::{Label, LabelSeq};
    let n = 7;
    let mut seen = std::collections::HashSet::new();
    for mut code in 0..4usize.pow(n) {
        let mut v = Vec::new();
        for _ in 0..n {
            v.push(Label::from_index(code % 4).unwrap());
            code /= 4;
        }
        let labels = LabelSeq(v);
        if let Ok(seg) = decode_bmes(&labels, "abcdefg") {
            assert_eq!(encode_bmes(&seg), labels);
            assert!(seen.insert(seg));
        }
    }
    assert_eq!(seen.len(), 1 << (n - 1));
}
