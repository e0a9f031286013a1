//! Word-embedding tables in the plain text format (`token v1 v2 ... vd`).

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{word_tokens, ClassifyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OovPolicy {
    /// Unknown tokens map to the mean of all stored vectors.
    Mean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    mean: Vec<f64>,
    pub oov: OovPolicy,
    /// Malformed lines skipped while loading.
    pub skipped: usize,
}

impl EmbeddingTable {
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self, ClassifyError> {
        if dim == 0 {
            return Err(ClassifyError::Embeddings("dimension must be positive".into()));
        }
        if rows.is_empty() {
            return Err(ClassifyError::Embeddings("no vectors".into()));
        }
        let mut table = EmbeddingTable {
            dim,
            tokens: Vec::with_capacity(rows.len()),
            index: HashMap::with_capacity(rows.len()),
            data: Vec::with_capacity(rows.len() * dim),
            mean: vec![0.0; dim],
            oov: OovPolicy::Mean,
            skipped: 0,
        };
        for (token, v) in rows {
            if v.len() != dim {
                return Err(ClassifyError::Embeddings(format!("vector for {token:?} has dimension {}", v.len())));
            }
            if table.index.contains_key(&token) {
                continue;
            }
            table.index.insert(token.clone(), table.tokens.len());
            table.tokens.push(token);
            table.data.extend_from_slice(&v);
        }
        let n = table.tokens.len() as f64;
        for row in table.data.chunks(dim) {
            for (m, x) in table.mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        table.mean.iter_mut().for_each(|m| *m /= n);
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Vector for `token`, falling back to the OOV policy.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.get(token).unwrap_or(&self.mean)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            write!(out, "{t}")?;
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {x:.6}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }
}

/// Parses the text format. The dimension comes from the first non-blank
/// line; malformed lines are skipped while they stay within
/// `max(1, ceil(1% of lines))`.
pub fn parse_embeddings<R: BufRead>(input: R) -> Result<EmbeddingTable, ClassifyError> {
    let mut dim = None;
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let mut lines = 0usize;
    for line in input.lines() {
        let line = line.map_err(|e| ClassifyError::Embeddings(e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        lines += 1;
        let mut parts = line.split(' ');
        let token = parts.next().unwrap_or_default().to_string();
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let d = *dim.get_or_insert_with(|| values.as_ref().map(Vec::len).unwrap_or(0));
        match values {
            Ok(v) if d > 0 && v.len() == d && v.iter().all(|x| x.is_finite()) => rows.push((token, v)),
            _ => skipped += 1,
        }
    }
    if lines == 0 {
        return Err(ClassifyError::Embeddings("empty embedding file".into()));
    }
    let budget = ((lines as f64) * 0.01).ceil().max(1.0) as usize;
    if skipped > budget {
        return Err(ClassifyError::Embeddings(format!(
            "{skipped} malformed lines out of {lines} exceed the skip budget of {budget}"
        )));
    }
    let mut table = EmbeddingTable::from_rows(dim.unwrap_or(0), rows)?;
    table.skipped = skipped;
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable, ClassifyError> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| ClassifyError::Embeddings(format!("{}: {e}", path.display())))?;
    parse_embeddings(BufReader::new(f))
}

/// Trains small dense embeddings from raw sentences: distance-weighted
/// co-occurrence counts, positive PMI, then a seeded sparse random
/// projection to `dim` dimensions with each vector rescaled to norm
/// `sqrt(dim) / 2`.
pub fn train_cooccurrence_embeddings(
    sentences: &[String],
    dim: usize,
    window: usize,
    seed: u64,
) -> Result<EmbeddingTable, ClassifyError> {
    let docs: Vec<Vec<String>> = sentences.iter().map(|s| word_tokens(s)).collect();
    let mut vocab: Vec<String> = docs.iter().flatten().cloned().collect();
    vocab.sort();
    vocab.dedup();
    if vocab.is_empty() {
        return Err(ClassifyError::Embeddings("no tokens to train on".into()));
    }
    let id: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut cooc: Vec<HashMap<usize, f64>> = vec![HashMap::new(); vocab.len()];
    for doc in &docs {
        let ids: Vec<usize> = doc.iter().map(|w| id[w.as_str()]).collect();
        for (i, &a) in ids.iter().enumerate() {
            for k in 1..=window {
                if i + k >= ids.len() {
                    break;
                }
                let b = ids[i + k];
                let w = 1.0 / k as f64;
                *cooc[a].entry(b).or_insert(0.0) += w;
                *cooc[b].entry(a).or_insert(0.0) += w;
            }
        }
    }
    let row_sums: Vec<f64> = cooc.iter().map(|r| r.values().sum()).collect();
    let total: f64 = row_sums.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Each context word gets a sparse random sign pattern.
    let scale = 1.0 / (dim as f64).sqrt();
    let projection: Vec<Vec<(usize, f64)>> = (0..vocab.len())
        .map(|_| {
            (0..dim)
                .filter_map(|j| {
                    let u: f64 = rng.gen();
                    if u < 1.0 / 6.0 {
                        Some((j, scale))
                    } else if u < 1.0 / 3.0 {
                        Some((j, -scale))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let target_norm = (dim as f64).sqrt() / 2.0;
    let mut rows = Vec::with_capacity(vocab.len());
    for (a, word) in vocab.iter().enumerate() {
        let mut v = vec![0.0; dim];
        let mut ctx: Vec<(&usize, &f64)> = cooc[a].iter().collect();
        ctx.sort_by_key(|(b, _)| **b);
        for (&b, &c) in ctx {
            let pmi = (c * total / (row_sums[a] * row_sums[b])).ln();
            if pmi > 0.0 {
                for &(j, s) in &projection[b] {
                    v[j] += pmi * s;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x *= target_norm / norm);
        }
        rows.push((word.clone(), v));
    }
    EmbeddingTable::from_rows(dim, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_line_fixture() {
        let t = parse_embeddings("cat 0.1 0.2 0.3\ndog 0.4 0.5 0.6\n".as_bytes()).unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("dog"), Some(&[0.4, 0.5, 0.6][..]));
        assert_eq!(t.skipped, 0);
    }

    #[test]
    fn one_malformed_line_in_ten() {
        let mut text = String::new();
        for i in 0..9 {
            text.push_str(&format!("w{i} {i}.0 1.0\n"));
        }
        text.push_str("broken 1.0\n");
        let t = parse_embeddings(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!(t.skipped, 1);
    }

    #[test]
    fn too_many_malformed_lines() {
        let text = "a 1 2\nb 1\nc x y\nd 3 4\n";
        assert!(parse_embeddings(text.as_bytes()).is_err());
    }

    #[test]
    fn empty_file() {
        assert!(parse_embeddings("".as_bytes()).is_err());
        assert!(load_embeddings("/nonexistent/vectors.txt").is_err());
    }

    #[test]
    fn oov_is_mean() {
        let t = parse_embeddings("a 1 2 3\nb 3 0 -3\nc 2 4 6\n".as_bytes()).unwrap();
        // Mean oracle computed column by column.
        assert_eq!(t.lookup("zzz"), &[2.0, 2.0, 2.0]);
        assert_eq!(t.lookup("b"), &[3.0, 0.0, -3.0]);
    }

    #[test]
    fn write_then_parse() {
        let t = parse_embeddings("a 1 2\nb 0.5 -0.25\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(parse_embeddings(&buf[..]).unwrap(), t);
    }

    #[test]
    fn cooccurrence_embeddings_cluster_by_context() {
        let sentences: Vec<String> = crate::corpus::fixture::background_corpus(4000, 1);
        let t = train_cooccurrence_embeddings(&sentences, 50, 3, 7).unwrap();
        let cos = |a: &str, b: &str| {
            let (x, y) = (t.get(a).unwrap(), t.get(b).unwrap());
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            dot / (x.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt())
        };
        assert!(cos("dog", "horse") > cos("dog", "report"), "{} {}", cos("dog", "horse"), cos("dog", "report"));
        assert!(cos("report", "memo") > cos("report", "cheese"));
        assert_eq!(t.dim(), 50);
    }
}
