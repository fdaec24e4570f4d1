use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::argcore::{DocId, EvidenceDoc, SourceType};
use crate::canonical::quantize;
use crate::text;

/// Ranks `corpus` against `query` by token overlap and returns the best
/// `top_k`, ordered by similarity (descending) then `doc_id`. Each returned
/// document carries its similarity to this query.
pub fn retrieve_evidence(
    query: &str,
    corpus: &[EvidenceDoc],
    top_k: usize,
) -> Result<Vec<EvidenceDoc>, PipelineError> {
    if top_k == 0 {
        return Err(PipelineError::InvalidConfig("retrieval top_k must be >= 1".into()));
    }
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let q = text::token_set(query);
    let mut scored: Vec<EvidenceDoc> = corpus
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.similarity = quantize(text::overlap_ratio(&q, &text::token_set(&d.text)));
            d
        })
        .collect();
    scored.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    scored.truncate(top_k);
    Ok(scored)
}

/// Manifest version understood by [`load_corpus`].
pub const CORPUS_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u64,
    documents: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    doc_id: DocId,
    file: String,
    source_type: SourceType,
    reliability: f64,
}

/// Reads an evidence corpus: `manifest.json` in `dir` lists every document
/// with its file name (relative to `dir`), source type and reliability.
pub fn load_corpus(dir: &Path) -> Result<Vec<EvidenceDoc>, PipelineError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| PipelineError::Corpus(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Corpus(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != CORPUS_FORMAT_VERSION {
        return Err(PipelineError::Corpus(format!(
            "unsupported manifest format_version {}",
            manifest.format_version
        )));
    }
    let mut seen = BTreeSet::new();
    let mut docs = Vec::with_capacity(manifest.documents.len());
    for entry in manifest.documents {
        if !seen.insert(entry.doc_id.clone()) {
            return Err(PipelineError::Corpus(format!("duplicate doc_id `{}`", entry.doc_id)));
        }
        let path = dir.join(&entry.file);
        let body = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::Corpus(format!("{}: {e}", path.display())))?;
        let doc = EvidenceDoc {
            doc_id: entry.doc_id,
            text: body.trim().to_string(),
            source_type: entry.source_type,
            reliability: quantize(entry.reliability),
            similarity: 0.0,
        };
        doc.validate().map_err(|e| PipelineError::Corpus(e.to_string()))?;
        docs.push(doc);
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(docs)
}
