use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::MemoryError;
use crate::llm::tokens::token_spans;
use crate::toolkit::embed::{dot, top_k};
use crate::toolkit::{Embedder, HashEmbedder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self { chunk_size: 256, overlap: 32 }
    }
}

impl ChunkingConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self, MemoryError> {
        if chunk_size == 0 || overlap >= chunk_size {
            return Err(MemoryError::InvalidChunking { chunk_size, overlap });
        }
        Ok(Self { chunk_size, overlap })
    }

    fn stride(&self) -> usize {
        self.chunk_size - self.overlap
    }

    /// Token windows `[start, end)` for a document of `n` tokens.
    ///
    /// A document that fits in one chunk yields one window. Otherwise a
    /// window starts at every multiple of the stride below `n`.
    pub fn windows(&self, n: usize) -> Vec<(usize, usize)> {
        if n == 0 {
            return Vec::new();
        }
        if n <= self.chunk_size {
            return vec![(0, n)];
        }
        (0..n)
            .step_by(self.stride())
            .map(|s| (s, (s + self.chunk_size).min(n)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub chunk_index: usize,
    pub text: String,
}

/// Flat-scan dense index over document chunks.
pub struct KnowledgeStore {
    config: ChunkingConfig,
    embedder: Arc<dyn Embedder>,
    chunks: Vec<Chunk>,
    vectors: Vec<Vec<f64>>,
    doc_ids: BTreeSet<String>,
}

impl std::fmt::Debug for KnowledgeStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeStore")
            .field("config", &self.config)
            .field("docs", &self.doc_ids)
            .field("chunks", &self.chunks.len())
            .finish()
    }
}

impl Default for KnowledgeStore {
    fn default() -> Self {
        Self::new(ChunkingConfig::default(), Arc::new(HashEmbedder::default()))
    }
}

impl KnowledgeStore {
    pub fn new(config: ChunkingConfig, embedder: Arc<dyn Embedder>) -> Self {
        Self { config, embedder, chunks: Vec::new(), vectors: Vec::new(), doc_ids: BTreeSet::new() }
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Splits `text` into overlapping token windows, embeds and indexes each.
    /// Returns the number of chunks added.
    pub fn ingest(&mut self, doc_id: &str, text: &str) -> Result<usize, MemoryError> {
        if self.doc_ids.contains(doc_id) {
            return Err(MemoryError::DuplicateDocument(doc_id.to_string()));
        }
        let spans = token_spans(text);
        if spans.is_empty() {
            return Err(MemoryError::EmptyDocument(doc_id.to_string()));
        }
        let windows = self.config.windows(spans.len());
        for (chunk_index, (start, end)) in windows.iter().enumerate() {
            let chunk_text = &text[spans[*start].0..spans[end - 1].1];
            self.vectors.push(self.embedder.embed(chunk_text));
            self.chunks.push(Chunk {
                doc_id: doc_id.to_string(),
                chunk_index,
                text: chunk_text.to_string(),
            });
        }
        self.doc_ids.insert(doc_id.to_string());
        Ok(windows.len())
    }

    /// Ingests every regular file in `dir` (non-recursive), using the file name
    /// as the document id. Files are visited in name order.
    pub fn ingest_dir(&mut self, dir: &Path) -> Result<usize, MemoryError> {
        let io = |e: std::io::Error| MemoryError::Io(format!("{}: {e}", dir.display()));
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let mut added = 0;
        for path in paths {
            let doc_id = path.file_name().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&path)
                .map_err(|e| MemoryError::Io(format!("{}: {e}", path.display())))?;
            added += self.ingest(&doc_id, &text)?;
        }
        Ok(added)
    }

    /// Top-`k` chunks by dot product; ties go to the lower `(doc_id, chunk_index)`.
    pub fn retrieve_chunks(&self, query: &str, k: usize) -> Result<Vec<&Chunk>, MemoryError> {
        if self.chunks.is_empty() {
            return Err(MemoryError::EmptyStore);
        }
        let q = self.embedder.embed(query);
        let scored = self
            .chunks
            .iter()
            .zip(&self.vectors)
            .enumerate()
            .map(|(i, (c, v))| (((&c.doc_id, c.chunk_index), i), dot(&q, v)))
            .collect();
        Ok(top_k(scored, k).into_iter().map(|((_, i), _)| &self.chunks[i]).collect())
    }

    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<String>, MemoryError> {
        Ok(self.retrieve_chunks(query, k)?.into_iter().map(|c| c.text.clone()).collect())
    }
}
