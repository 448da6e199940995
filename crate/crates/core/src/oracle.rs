//! Brute-force reference implementations used to cross-check the metric
//! code, plus an on-demand verification suite. The oracles deliberately
//! share no code with the implementations they check: edit distance is an
//! exhaustive search over edit scripts, set counts come from scanning
//! lists, n-gram counts from window comparisons.

use std::io::Write;

use crate::distance::{dice_distance, gld, jaccard_distance, normalized_levenshtein, EditCostScheme};
use crate::matching::embedding::{mock_embedder, OrthogonalEmbedder};
use crate::matching::{bert_score, sentence_bleu, BleuConfig, Smoothing};
use crate::rng::SplitMix64;
use crate::tokenizer::{tokenize, TokenSeq};

const ORACLE_MAX_LEN: usize = 12;

/// Exhaustive minimum edit weight: recurses over every delete / insert /
/// substitute-or-keep script with no memoization. Exponential; inputs are
/// capped at length 12.
pub fn exhaustive_gld(x: &TokenSeq, y: &TokenSeq, scheme: &EditCostScheme) -> f64 {
    assert!(
        x.len() <= ORACLE_MAX_LEN && y.len() <= ORACLE_MAX_LEN,
        "exhaustive oracle is exponential; keep lengths <= {ORACLE_MAX_LEN}"
    );
    fn search(xs: &[String], ys: &[String], i: usize, j: usize, scheme: &EditCostScheme) -> f64 {
        if i == xs.len() && j == ys.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        if i < xs.len() {
            best = best.min(scheme.deletion_cost() + search(xs, ys, i + 1, j, scheme));
        }
        if j < ys.len() {
            best = best.min(scheme.insertion_cost() + search(xs, ys, i, j + 1, scheme));
        }
        if i < xs.len() && j < ys.len() {
            let step = if xs[i] == ys[j] {
                0.0
            } else {
                scheme.substitution_cost()
            };
            best = best.min(step + search(xs, ys, i + 1, j + 1, scheme));
        }
        best
    }
    search(x.tokens(), y.tokens(), 0, 0, scheme)
}

/// Jaccard and Dice distances by explicit list scanning; `None` when both
/// sides are empty.
pub fn enumerated_set_distances(x: &TokenSeq, y: &TokenSeq) -> Option<(f64, f64)> {
    if x.is_empty() && y.is_empty() {
        return None;
    }
    let mut x_unique: Vec<&String> = Vec::new();
    for t in x.tokens() {
        if !x_unique.contains(&t) {
            x_unique.push(t);
        }
    }
    let mut y_unique: Vec<&String> = Vec::new();
    for t in y.tokens() {
        if !y_unique.contains(&t) {
            y_unique.push(t);
        }
    }
    let mut inter = 0usize;
    for t in &x_unique {
        if y_unique.contains(t) {
            inter += 1;
        }
    }
    let union = x_unique.len() + y_unique.len() - inter;
    let jaccard = 1.0 - inter as f64 / union as f64;
    let dice = 1.0 - (2.0 * inter as f64) / (x_unique.len() + y_unique.len()) as f64;
    Some((jaccard, dice))
}

/// Clipped n-gram matches and candidate n-gram total by brute-force window
/// comparison, no hash maps.
pub fn enumerated_ngram_counts(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> (u64, u64) {
    let cand = candidate.tokens();
    let reff = reference.tokens();
    if cand.len() < n {
        return (0, 0);
    }
    let total = (cand.len() - n + 1) as u64;
    let windows: Vec<&[String]> = cand.windows(n).collect();
    let mut matched = 0u64;
    for (idx, gram) in windows.iter().enumerate() {
        // Count each distinct gram once, at its first occurrence.
        if windows[..idx].iter().any(|seen| seen == gram) {
            continue;
        }
        let in_cand = windows.iter().filter(|w| *w == gram).count() as u64;
        let in_ref = if reff.len() < n {
            0
        } else {
            reff.windows(n).filter(|w| *w == *gram).count() as u64
        };
        matched += in_cand.min(in_ref);
    }
    (matched, total)
}

/// Deterministic random token sequence over a small alphabet. Lengths are
/// uniform in `0..=max_len`.
pub fn random_token_seq(rng: &mut SplitMix64, max_len: usize, alphabet_size: usize) -> TokenSeq {
    const ALPHABET: [&str; 12] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"];
    let size = alphabet_size.clamp(1, ALPHABET.len());
    let len = rng.next_below(max_len + 1);
    let text: Vec<&str> = (0..len).map(|_| ALPHABET[rng.next_below(size)]).collect();
    tokenize(&text.join(" "))
}

struct Check<'a, W: Write> {
    out: &'a mut W,
    all_passed: bool,
}

impl<'a, W: Write> Check<'a, W> {
    fn report(&mut self, passed: bool, description: &str) -> std::io::Result<()> {
        self.all_passed &= passed;
        writeln!(
            self.out,
            "{} {description}",
            if passed { "PASS" } else { "FAIL" }
        )
    }
}

/// Runs the oracle suite: edit-distance and set-metric oracle equivalence,
/// metric axioms, structural orderings, and the hand-computed BLEU and
/// BERTScore fixtures. Returns whether everything passed.
pub fn run_verification(seed: u64, pairs: usize, out: &mut impl Write) -> std::io::Result<bool> {
    let mut rng = SplitMix64::new(seed);
    let mut check = Check {
        out,
        all_passed: true,
    };
    let unit = EditCostScheme::unit();

    let mut gld_ok = true;
    for _ in 0..pairs {
        let x = random_token_seq(&mut rng, 7, 4);
        let y = random_token_seq(&mut rng, 7, 4);
        if gld(&x, &y, &unit) != exhaustive_gld(&x, &y, &unit) {
            gld_ok = false;
            break;
        }
    }
    check.report(gld_ok, &format!("gld matches exhaustive edit-script oracle ({pairs} pairs)"))?;

    let mut sets_ok = true;
    for _ in 0..pairs {
        let x = random_token_seq(&mut rng, 8, 4);
        let y = random_token_seq(&mut rng, 8, 4);
        match enumerated_set_distances(&x, &y) {
            None => continue,
            Some((jaccard, dice)) => {
                if jaccard_distance(&x, &y).unwrap() != jaccard
                    || dice_distance(&x, &y).unwrap() != dice
                {
                    sets_ok = false;
                    break;
                }
            }
        }
    }
    check.report(sets_ok, &format!("jaccard/dice match set-enumeration oracle ({pairs} pairs)"))?;

    let mut axioms_ok = true;
    for _ in 0..pairs {
        let x = random_token_seq(&mut rng, 8, 4);
        let y = random_token_seq(&mut rng, 8, 4);
        if x.is_empty() && y.is_empty() {
            continue;
        }
        let d_xy = crate::distance::distance_vector(&x, &y, &unit);
        let d_yx = crate::distance::distance_vector(&y, &x, &unit);
        for (a, b) in [
            (d_xy.levenshtein, d_yx.levenshtein),
            (d_xy.jaccard, d_yx.jaccard),
            (d_xy.dice, d_yx.dice),
            (d_xy.cosine, d_yx.cosine),
        ] {
            if a != b || !(0.0..=1.0).contains(&a) {
                axioms_ok = false;
            }
        }
        if !x.is_empty() {
            let d_xx = crate::distance::distance_vector(&x, &x, &unit);
            if d_xx.levenshtein != 0.0
                || d_xx.jaccard != 0.0
                || d_xx.dice != 0.0
                || d_xx.cosine > 1e-9
            {
                axioms_ok = false;
            }
        }
    }
    check.report(axioms_ok, &format!("identity, symmetry, [0,1] bounds ({pairs} pairs)"))?;

    let mut triangle_ok = true;
    for _ in 0..pairs.min(1000) {
        let x = random_token_seq(&mut rng, 6, 3);
        let y = random_token_seq(&mut rng, 6, 3);
        let z = random_token_seq(&mut rng, 6, 3);
        if x.is_empty() && y.is_empty() || y.is_empty() && z.is_empty() || x.is_empty() && z.is_empty() {
            continue;
        }
        let d = |a: &TokenSeq, b: &TokenSeq| {
            if a.is_empty() && b.is_empty() {
                0.0
            } else {
                normalized_levenshtein(a, b, &unit).unwrap()
            }
        };
        if d(&x, &z) > d(&x, &y) + d(&y, &z) + 1e-12 {
            triangle_ok = false;
            break;
        }
    }
    check.report(triangle_ok, "normalized levenshtein triangle inequality")?;

    let mut order_ok = true;
    let bleu1 = BleuConfig::bleu1().with_smoothing(Smoothing::None);
    let bleu4 = BleuConfig::bleu4().with_smoothing(Smoothing::None);
    for _ in 0..pairs {
        let x = random_token_seq(&mut rng, 8, 4);
        let y = random_token_seq(&mut rng, 8, 4);
        if !(x.is_empty() && y.is_empty()) {
            let (jaccard, dice) = enumerated_set_distances(&x, &y).unwrap();
            if dice > jaccard {
                order_ok = false;
            }
        }
        if !y.is_empty() {
            let s1 = sentence_bleu(&x, &y, &bleu1).unwrap();
            let s4 = sentence_bleu(&x, &y, &bleu4).unwrap();
            if s1 + 1e-12 < s4 {
                order_ok = false;
            }
        }
    }
    check.report(order_ok, &format!("dice <= jaccard and bleu1 >= bleu4 orderings ({pairs} pairs)"))?;

    let cand = tokenize("the the the");
    let reff = tokenize("the cat sat");
    let fixture = sentence_bleu(&cand, &reff, &BleuConfig::bleu1()).unwrap();
    let identical = sentence_bleu(&reff, &reff, &BleuConfig::bleu4()).unwrap();
    check.report(
        (fixture - 1.0 / 3.0).abs() <= 1e-9 && identical == 1.0,
        "bleu fixtures (clipped 1/3; identical pair exactly 1)",
    )?;

    let mock = mock_embedder(16, seed);
    let sentence = tokenize("the film was wonderful");
    let same = bert_score(&sentence, &sentence, &mock).unwrap();
    let ortho = OrthogonalEmbedder::new(8);
    let disjoint = bert_score(&tokenize("a"), &tokenize("b"), &ortho).unwrap();
    let greedy = bert_score(&tokenize("a b"), &tokenize("a c"), &ortho).unwrap();
    check.report(
        (same.f1 - 1.0).abs() <= 1e-9
            && disjoint.f1.abs() <= 1e-9
            && (greedy.f1 - 0.5).abs() <= 1e-9,
        "bertscore fixtures (identical 1; orthogonal 0; greedy 2x2 = 0.5)",
    )?;

    Ok(check.all_passed)
}
