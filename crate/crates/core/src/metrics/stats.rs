use serde::{Deserialize, Serialize};

use super::agreement::binarize;
use crate::numstats::{pearson, spearman};
use crate::types::{AttributionMap, LabeledExample, MaskedLm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributionStats {
    /// Mean `|score|` over every token of every map, before any normalization.
    pub mean_abs: f64,
    /// Mean over examples of the percentage of tokens kept by binarization.
    pub coverage_pct: f64,
}

pub fn attribution_stats(maps: &[AttributionMap], examples: &[LabeledExample], tau: f64) -> Result<AttributionStats> {
    if maps.len() != examples.len() {
        return Err(Error::Misaligned(alloc::format!("{} maps for {} examples", maps.len(), examples.len())));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("tau {tau} not in (0, 1)")));
    }
    let (mut abs_sum, mut tokens, mut coverage_sum) = (0.0, 0usize, 0.0);
    for (map, ex) in maps.iter().zip(examples) {
        if map.len() != ex.len() {
            return Err(Error::LengthMismatch { expected: ex.len(), found: map.len() });
        }
        abs_sum += map.scores.iter().map(|s| s.abs()).sum::<f64>();
        tokens += map.len();
        coverage_sum += 100.0 * binarize(&map.scores, tau).count() as f64 / map.len() as f64;
    }
    if maps.is_empty() {
        return Ok(AttributionStats { mean_abs: 0.0, coverage_pct: 0.0 });
    }
    Ok(AttributionStats { mean_abs: abs_sum / tokens as f64, coverage_pct: coverage_sum / maps.len() as f64 })
}

/// How often the MLM's top-1 reproduces the original token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactMatchStats {
    pub pct_exact_all: f64,
    /// Over human-highlighted tokens; 0 when no example has a highlight.
    pub pct_exact_highlighted: f64,
    /// Mean top-1 likelihood over matching positions; 0 when nothing matched.
    pub mean_top1_likelihood_on_match: f64,
    pub tokens: usize,
    pub highlighted_tokens: usize,
    pub matches: usize,
}

impl ExactMatchStats {
    /// True when no position matched, so the likelihood mean is a placeholder.
    pub fn no_matches(&self) -> bool {
        self.matches == 0
    }
}

/// Masks every position in turn and compares the top-1 candidate with the
/// original token, ignoring case.
pub fn exact_match_stats<M: MaskedLm + ?Sized>(mlm: &M, examples: &[LabeledExample]) -> Result<ExactMatchStats> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (mut tokens, mut matches, mut likelihood_sum) = (0usize, 0usize, 0.0);
    let (mut highlighted, mut highlighted_matches) = (0usize, 0usize);
    for ex in examples {
        let seq = &ex.sequence;
        for i in 0..seq.len() {
            let original = seq.token(i)?.to_lowercase();
            let top = mlm.top1(seq, i)?;
            let hit = top.as_ref().is_some_and(|c| c.token.to_lowercase() == original);
            tokens += 1;
            if hit {
                matches += 1;
                likelihood_sum += top.map_or(0.0, |c| c.likelihood);
            }
            if ex.highlight.as_ref().is_some_and(|h| h.get(i) == Some(&1)) {
                highlighted += 1;
                highlighted_matches += usize::from(hit);
            }
        }
    }
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    Ok(ExactMatchStats {
        pct_exact_all: pct(matches, tokens),
        pct_exact_highlighted: pct(highlighted_matches, highlighted),
        mean_top1_likelihood_on_match: if matches == 0 { 0.0 } else { likelihood_sum / matches as f64 },
        tokens,
        highlighted_tokens: highlighted,
        matches,
    })
}

/// Pearson correlation between two maps of the same sequence.
pub fn map_correlation(a: &AttributionMap, b: &AttributionMap) -> Result<f64> {
    pearson(&a.scores, &b.scores)
}

/// Spearman rank correlation between two maps of the same sequence.
pub fn map_rank_correlation(a: &AttributionMap, b: &AttributionMap) -> Result<f64> {
    spearman(&a.scores, &b.scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DeltaMlm, FixedMlm, NgramMlm, UniformMlm};
    use crate::types::{ScoreSpace, TokenSequence};
    use alloc::vec;
    use alloc::vec::Vec;

    fn map(scores: Vec<f64>) -> AttributionMap {
        AttributionMap::new(scores, "m", "pos", ScoreSpace::LogOdds)
    }

    fn example(id: &str, tokens: &[&str]) -> LabeledExample {
        LabeledExample::new(id, TokenSequence::new(tokens.iter().copied()).unwrap(), "pos")
    }

    #[test]
    fn zero_maps_and_single_positive() {
        let ex = vec![example("a", &["w", "x", "y", "z"])];
        let s = attribution_stats(&[map(vec![0.0; 4])], &ex, 0.5).unwrap();
        assert_eq!((s.mean_abs, s.coverage_pct), (0.0, 0.0));
        let s = attribution_stats(&[map(vec![1.0, -1.0, 0.0, 0.0])], &ex, 0.5).unwrap();
        assert_eq!(s.coverage_pct, 25.0);
        assert_eq!(s.mean_abs, 0.5);
    }

    #[test]
    fn three_maps_by_hand() {
        let ex = vec![example("a", &["p", "q"]), example("b", &["p", "q", "r"]), example("c", &["p", "q", "r", "s"])];
        let maps = [map(vec![2.0, -4.0]), map(vec![0.3, 0.6, 0.9]), map(vec![1.0, 1.0, -1.0, 0.4])];
        let s = attribution_stats(&maps, &ex, 0.5).unwrap();
        // |scores|: 6 + 1.8 + 3.4 = 11.2 over 9 tokens.
        assert!((s.mean_abs - 11.2 / 9.0).abs() < 1e-12);
        // coverage: 1/2, 2/3 (0.6/0.9 and 0.9/0.9), 2/4.
        let expected = 100.0 * (0.5 + 2.0 / 3.0 + 0.5) / 3.0;
        assert!((s.coverage_pct - expected).abs() < 1e-12);
        assert!(attribution_stats(&maps[..2], &ex, 0.5).is_err());
    }

    #[test]
    fn delta_mlm_always_matches() {
        let ex = vec![example("a", &["The", "cat"]).with_highlight(vec![1, 0])];
        let s = exact_match_stats(&DeltaMlm, &ex).unwrap();
        assert_eq!((s.pct_exact_all, s.pct_exact_highlighted, s.mean_top1_likelihood_on_match), (100.0, 100.0, 1.0));
    }

    #[test]
    fn absent_token_never_matches() {
        let ex = vec![example("a", &["the", "cat"])];
        let s = exact_match_stats(&FixedMlm::new("zzz-absent"), &ex).unwrap();
        assert_eq!(s.pct_exact_all, 0.0);
        assert_eq!(s.mean_top1_likelihood_on_match, 0.0);
        assert!(s.no_matches());
    }

    #[test]
    fn ngram_on_repeated_trigram() {
        let texts: Vec<TokenSequence> =
            (0..30).map(|_| TokenSequence::new(["hot", "air", "balloon"]).unwrap()).collect();
        let mlm = NgramMlm::train(&texts, 0.1, 0.5).unwrap();
        let ex: Vec<LabeledExample> =
            (0..5).map(|i| example(&alloc::format!("e{i}"), &["hot", "air", "balloon"])).collect();
        assert!(exact_match_stats(&mlm, &ex).unwrap().pct_exact_all > 90.0);
    }

    #[test]
    fn casing_does_not_matter_for_context_free_mlms() {
        let lower = vec![example("a", &["a", "b", "c"])];
        let upper = vec![example("a", &["A", "B", "C"])];
        let uniform = UniformMlm::new(["a", "q"]).unwrap();
        for mlm in [&uniform as &dyn MaskedLm, &DeltaMlm] {
            assert_eq!(
                exact_match_stats(mlm, &lower).unwrap().pct_exact_all,
                exact_match_stats(mlm, &upper).unwrap().pct_exact_all
            );
        }
    }

    #[test]
    fn correlation_examples() {
        let a = map(vec![1.0, 2.0, 0.5]);
        let neg = map(vec![-1.0, -2.0, -0.5]);
        assert!((map_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((map_correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(map_correlation(&a, &map(vec![1.0; 3])), Err(Error::ConstantVector));
    }

    #[test]
    fn published_im_rows_correlate() {
        let im = [1.815, 0.0118, 0.54158, 0.22394, 1.03458, 5.03105, 1.94109, 1.53783, -0.31367, -0.0026];
        let modified = [2.64685, 0.03574, 0.34608, 0.51827, 1.61421, 5.74711, 4.16886, 2.30276, -0.35139, 0.01431];
        let (a, b) = (map(im.to_vec()), map(modified.to_vec()));
        // The published 0.988 is reproduced by the rank correlation; the
        // linear coefficient of the same rows is 0.9532.
        let rank = map_rank_correlation(&a, &b).unwrap();
        assert!((rank - 0.988).abs() <= 0.001, "rank rho = {rank}");
        let linear = map_correlation(&a, &b).unwrap();
        assert!((linear - 0.95322466085726).abs() < 1e-12, "linear rho = {linear}");
    }
}
