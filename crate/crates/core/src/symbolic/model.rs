use crate::error::{Error, Result};
use crate::symbolic::Word;

/// Largest number of cylinders we are willing to tabulate at a single depth.
const MAX_CYLINDERS: usize = 1 << 22;
const MAX_DEPTH: usize = 64;

/// A one-sided Markov subshift given by a 0/1 transition matrix.
///
/// Words are ranked in lexicographic order; that rank is the storage index
/// of every tabulated cylinder function and measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftModel {
    alphabet_size: usize,
    allowed: Vec<bool>,
    // counts[len][a] = number of admissible words of length `len` starting with `a`
    counts: Vec<Vec<usize>>,
    totals: Vec<usize>,
}

impl ShiftModel {
    /// Builds a model from a row-major 0/1 transition matrix.
    pub fn new(alphabet_size: usize, transition: &[u8]) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidModel(format!(
                "alphabet_size must be at least 2, got {alphabet_size}"
            )));
        }
        if alphabet_size > 36 {
            return Err(Error::InvalidModel(format!(
                "alphabet_size {alphabet_size} exceeds the supported maximum of 36"
            )));
        }
        if transition.len() != alphabet_size * alphabet_size {
            return Err(Error::InvalidModel(format!(
                "transition must have {} entries, got {}",
                alphabet_size * alphabet_size,
                transition.len()
            )));
        }
        if let Some(bad) = transition.iter().find(|&&t| t > 1) {
            return Err(Error::InvalidModel(format!(
                "transition entries must be 0 or 1, found {bad}"
            )));
        }
        let k = alphabet_size;
        let allowed: Vec<bool> = transition.iter().map(|&t| t == 1).collect();
        for a in 0..k {
            if !(0..k).any(|b| allowed[a * k + b]) {
                return Err(Error::InvalidModel(format!("transition row {a} is all zero")));
            }
            if !(0..k).any(|b| allowed[b * k + a]) {
                return Err(Error::InvalidModel(format!(
                    "transition column {a} is all zero"
                )));
            }
        }

        let mut counts = vec![vec![0usize; k], vec![1usize; k]];
        let mut totals = vec![1usize, k];
        while counts.len() <= MAX_DEPTH {
            let prev = counts.last().unwrap();
            let next: Vec<usize> = (0..k)
                .map(|a| {
                    (0..k)
                        .filter(|&b| allowed[a * k + b])
                        .map(|b| prev[b])
                        .sum()
                })
                .collect();
            let total: usize = next.iter().sum();
            if total > MAX_CYLINDERS {
                break;
            }
            counts.push(next);
            totals.push(total);
        }

        Ok(ShiftModel {
            alphabet_size,
            allowed,
            counts,
            totals,
        })
    }

    /// The full shift on `k` symbols.
    pub fn full_shift(k: usize) -> Result<Self> {
        ShiftModel::new(k, &vec![1; k * k])
    }

    /// The golden-mean shift: the word `11` is forbidden.
    pub fn golden_mean() -> Self {
        ShiftModel::new(2, &[1, 1, 1, 0]).expect("golden mean shift is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// True when `a` may be followed by `b`.
    #[inline]
    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.allowed[a * self.alphabet_size + b]
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&t| t)
    }

    /// Row-major transition matrix as 0/1 entries.
    pub fn transition(&self) -> Vec<u8> {
        self.allowed.iter().map(|&t| t as u8).collect()
    }

    /// Some power of the transition matrix is strictly positive.
    pub fn is_primitive(&self) -> bool {
        let k = self.alphabet_size;
        // Wielandt's bound on the primitivity exponent.
        let bound = (k - 1) * (k - 1) + 1;
        let mut power = self.allowed.clone();
        for _ in 1..bound {
            let mut next = vec![false; k * k];
            for i in 0..k {
                for j in 0..k {
                    next[i * k + j] = (0..k).any(|m| power[i * k + m] && self.allowed[m * k + j]);
                }
            }
            power = next;
        }
        power.iter().all(|&t| t)
    }

    /// Deepest tabulation supported for this model.
    pub fn max_depth(&self) -> usize {
        self.totals.len() - 1
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.max_depth() {
            return Err(Error::DepthTooLarge {
                requested: depth,
                limit: self.max_depth(),
            });
        }
        Ok(())
    }

    /// Number of admissible words of length `depth`.
    pub fn word_count(&self, depth: usize) -> usize {
        self.totals[depth]
    }

    /// Number of admissible extensions of a depth-`depth` word whose last
    /// symbol is `last` (`None` for the empty word) to depth `target`.
    pub(crate) fn extension_count(&self, depth: usize, last: Option<usize>, target: usize) -> usize {
        debug_assert!(target >= depth);
        match last {
            None => self.totals[target],
            Some(a) => self.counts[target - depth + 1][a],
        }
    }

    pub fn is_admissible(&self, symbols: &[usize]) -> bool {
        symbols.iter().all(|&s| s < self.alphabet_size)
            && symbols.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    pub(crate) fn check_admissible(&self, symbols: &[usize]) -> Result<()> {
        if self.is_admissible(symbols) {
            Ok(())
        } else {
            Err(Error::Inadmissible {
                word: Word::from(symbols.to_vec()).to_string(),
            })
        }
    }

    /// Lexicographic rank of an admissible word among the admissible words
    /// of the same length.
    pub fn rank(&self, symbols: &[usize]) -> usize {
        let len = symbols.len();
        let mut rank = 0;
        for (i, &s) in symbols.iter().enumerate() {
            let remaining = len - i;
            for b in 0..s {
                if i == 0 || self.allows(symbols[i - 1], b) {
                    rank += self.counts[remaining][b];
                }
            }
        }
        rank
    }

    /// Visits the admissible words of length `depth` in lexicographic order.
    pub fn for_each_word<F: FnMut(usize, &[usize])>(&self, depth: usize, mut visit: F) {
        if depth == 0 {
            visit(0, &[]);
            return;
        }
        let k = self.alphabet_size;
        let mut word = vec![0usize; depth];
        let mut index = 0;
        // Iterative depth-first enumeration; `pos` is the position being filled.
        let mut pos = 0;
        let mut next = vec![0usize; depth];
        loop {
            let mut placed = false;
            while next[pos] < k {
                let s = next[pos];
                next[pos] += 1;
                if pos == 0 || self.allows(word[pos - 1], s) {
                    word[pos] = s;
                    placed = true;
                    break;
                }
            }
            if !placed {
                if pos == 0 {
                    break;
                }
                next[pos] = 0;
                pos -= 1;
                continue;
            }
            if pos + 1 == depth {
                visit(index, &word);
                index += 1;
            } else {
                pos += 1;
                next[pos] = 0;
            }
        }
    }

    /// All admissible words of length `depth`, in lexicographic order.
    pub fn words(&self, depth: usize) -> Vec<Word> {
        let mut out = Vec::with_capacity(self.totals.get(depth).copied().unwrap_or(0));
        self.for_each_word(depth, |_, w| out.push(Word::from(w.to_vec())));
        out
    }

    /// Admissible one-symbol extensions `a·w` of `w` (every symbol for the
    /// empty word).
    pub fn preimages(&self, word: &Word) -> Result<Vec<Word>> {
        self.check_admissible(word.symbols())?;
        Ok((0..self.alphabet_size)
            .filter(|&a| word.first().is_none_or(|w0| self.allows(a, w0)))
            .map(|a| {
                let mut s = Vec::with_capacity(word.len() + 1);
                s.push(a);
                s.extend_from_slice(word.symbols());
                Word::from(s)
            })
            .collect())
    }
}

/// Admissible words of length `depth` in canonical (lexicographic) order.
pub fn admissible_words(model: &ShiftModel, depth: usize) -> Result<Vec<Word>> {
    model.check_depth(depth)?;
    Ok(model.words(depth))
}

/// The words `a·w` whose cylinders map onto `[w]` under the shift.
pub fn preimages(model: &ShiftModel, word: &Word) -> Result<Vec<Word>> {
    model.preimages(word)
}
