use std::collections::{BTreeMap, HashMap};

use crate::error::ModelError;
use crate::types::{Candidate, TokenId, Vocabulary};

use super::{Encoding, Scorer};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// N-gram table scorer. The next-token row is keyed by the last `order`
/// tokens of the candidate, left-padded with `sos`; the input is ignored.
#[derive(Debug, Clone)]
pub struct TableScorer {
    vocab: Vocabulary,
    order: usize,
    rows: HashMap<Vec<TokenId>, Vec<f64>>,
}

impl TableScorer {
    /// Builds a table, checking that every row is a normalized distribution
    /// over the vocabulary (`-inf` marks an impossible token) and that every reachable context
    /// (any `order` tokens other than `eos`) has a row.
    ///
    /// With `renormalize`, rows are shifted to sum to one instead of being
    /// rejected.
    pub fn new(
        vocab: Vocabulary,
        order: usize,
        rows: BTreeMap<Vec<TokenId>, Vec<f64>>,
        renormalize: bool,
    ) -> Result<Self, ModelError> {
        let mut table = HashMap::with_capacity(rows.len());
        for (context, mut row) in rows {
            let key = join(&context);
            if context.len() != order {
                return Err(ModelError::Format(format!(
                    "context `{key}` has {} tokens, order is {order}",
                    context.len()
                )));
            }
            if let Some(t) = context.iter().find(|t| !vocab.contains(**t)) {
                return Err(ModelError::Format(format!("context `{key}` uses token {t} outside the vocabulary")));
            }
            if row.len() != vocab.size() {
                return Err(ModelError::Format(format!(
                    "row `{key}` has {} entries, vocabulary has {}",
                    row.len(),
                    vocab.size()
                )));
            }
            if row.iter().any(|x| x.is_nan() || *x == f64::INFINITY) || row.iter().all(|x| *x == f64::NEG_INFINITY) {
                return Err(ModelError::Format(format!("row `{key}` is not a log-probability vector")));
            }
            let lse = log_sum_exp(&row);
            if renormalize {
                row.iter_mut().for_each(|x| *x -= lse);
            } else {
                let total = lse.exp();
                if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(ModelError::Format(format!(
                        "row `{key}` sums to {total} after exponentiation"
                    )));
                }
            }
            table.insert(context, row);
        }

        let scorer = Self {
            vocab,
            order,
            rows: table,
        };
        scorer.check_total()?;
        Ok(scorer)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check_total(&self) -> Result<(), ModelError> {
        let alphabet: Vec<TokenId> = self.vocab.tokens().filter(|t| *t != self.vocab.eos()).collect();
        let mut context = vec![alphabet[0]; self.order];
        let mut digits = vec![0usize; self.order];
        loop {
            for (slot, d) in context.iter_mut().zip(&digits) {
                *slot = alphabet[*d];
            }
            if !self.rows.contains_key(&context) {
                return Err(ModelError::MissingRow(join(&context)));
            }
            // Odometer increment over alphabet^order.
            let mut pos = self.order;
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < alphabet.len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    fn context_of(&self, candidate: &Candidate) -> Vec<TokenId> {
        let tokens = &candidate.tokens;
        let mut context = Vec::with_capacity(self.order);
        let pad = self.order.saturating_sub(tokens.len());
        context.extend(std::iter::repeat_n(self.vocab.sos(), pad));
        context.extend_from_slice(&tokens[tokens.len() - (self.order - pad)..]);
        context
    }
}

impl Scorer for TableScorer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn encode(&self, input_id: usize, tokens: &[TokenId]) -> Result<Encoding, ModelError> {
        Encoding::new(input_id, tokens, &self.vocab, 0)
    }

    fn score_next(&self, _encoding: &Encoding, candidate: &Candidate) -> Result<Vec<f64>, ModelError> {
        let context = self.context_of(candidate);
        self.rows
            .get(&context)
            .cloned()
            .ok_or_else(|| ModelError::MissingRow(join(&context)))
    }
}

fn join(context: &[TokenId]) -> String {
    context.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

pub(crate) fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab3() -> Vocabulary {
        // 0 = sos (also emittable), 1 = a, 2 = eos
        Vocabulary::new(3, TokenId(0), TokenId(2)).unwrap()
    }

    fn uniform_bigram() -> TableScorer {
        let row = vec![(1.0f64 / 3.0).ln(); 3];
        let rows = [0, 1]
            .into_iter()
            .map(|t| (vec![TokenId(t)], row.clone()))
            .collect();
        TableScorer::new(vocab3(), 1, rows, false).unwrap()
    }

    #[test]
    fn uniform_rows_score_log_third() {
        let m = uniform_bigram();
        let enc = m.encode(0, &[TokenId(1)]).unwrap();
        let c = Candidate::start(m.vocab(), 0);
        for x in m.score_next(&enc, &c).unwrap() {
            assert_eq!(x, (1.0f64 / 3.0).ln());
        }
    }

    #[test]
    fn missing_context_is_rejected_at_load() {
        let rows = [(vec![TokenId(0)], vec![(1.0f64 / 3.0).ln(); 3])].into_iter().collect();
        let err = TableScorer::new(vocab3(), 1, rows, false).unwrap_err();
        assert_eq!(err, ModelError::MissingRow("1".into()));
    }

    #[test]
    fn unnormalized_row_is_rejected_unless_renormalizing() {
        let rows: BTreeMap<_, _> = [0, 1]
            .into_iter()
            .map(|t| (vec![TokenId(t)], vec![0.0, -1.0, -2.0]))
            .collect();
        assert!(matches!(
            TableScorer::new(vocab3(), 1, rows.clone(), false),
            Err(ModelError::Format(_))
        ));
        let m = TableScorer::new(vocab3(), 1, rows, true).unwrap();
        let enc = m.encode(0, &[TokenId(1)]).unwrap();
        let row = m.score_next(&enc, &Candidate::start(m.vocab(), 0)).unwrap();
        assert!((log_sum_exp(&row)).abs() < 1e-12);
    }

    #[test]
    fn wrong_row_width_is_rejected() {
        let rows = [0, 1]
            .into_iter()
            .map(|t| (vec![TokenId(t)], vec![0.5f64.ln(); 2]))
            .collect();
        assert!(matches!(TableScorer::new(vocab3(), 1, rows, false), Err(ModelError::Format(_))));
    }

    #[test]
    fn context_is_sos_padded() {
        let v = Vocabulary::new(4, TokenId(0), TokenId(3)).unwrap();
        let mut rows = BTreeMap::new();
        for a in 0..3u32 {
            for b in 0..3u32 {
                // Put all mass on token (a + b) % 3 to tell contexts apart.
                let mut row = vec![1e-30f64.ln(); 4];
                row[((a + b) % 3) as usize] = (1.0f64 - 3e-30).ln();
                rows.insert(vec![TokenId(a), TokenId(b)], row);
            }
        }
        let m = TableScorer::new(v, 2, rows, false).unwrap();
        let start = Candidate::start(&v, 0);
        assert_eq!(m.context_of(&start), vec![TokenId(0), TokenId(0)]);
        let c = start.extend(TokenId(1), 0.0, v.eos(), 10).extend(TokenId(2), 0.0, v.eos(), 10);
        assert_eq!(m.context_of(&c), vec![TokenId(1), TokenId(2)]);
    }

    #[test]
    fn order_zero_is_a_unigram() {
        let rows = [(vec![], vec![(1.0f64 / 3.0).ln(); 3])].into_iter().collect();
        let m = TableScorer::new(vocab3(), 0, rows, false).unwrap();
        let enc = m.encode(0, &[TokenId(1)]).unwrap();
        assert_eq!(m.score_next(&enc, &Candidate::start(m.vocab(), 0)).unwrap().len(), 3);
    }
}
