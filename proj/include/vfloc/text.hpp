#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vfloc {

/// Ordered list of lowercase, stop-word-free, lemmatized tokens.
using TokenStream = std::vector<std::string>;

/// Splits an identifier on underscores, digits and camelCase humps.
/// Single-letter fragments fuse with the fragment that follows, so
/// "XStreamBrokerContext" becomes {"xstream","broker","context"}.
std::vector<std::string> split_identifier(std::string_view ident);

/// Rule-based English lemmatizer covering inflectional suffixes only
/// (plural -s/-es/-ies, past -ed, gerund -ing). Derivational suffixes
/// are left alone so "serialized" maps to "serialize", not "serial".
std::string lemmatize(std::string_view word);

bool is_stop_word(std::string_view word);

/// Free text or code -> TokenStream. Lowercases, splits identifiers,
/// removes stop words, lemmatizes. Empty input gives an empty stream.
TokenStream sanitize(std::string_view raw);

/// Document-frequency statistics for BM25 over a fixed corpus.
struct CorpusStats {
  std::size_t doc_count = 0;
  double avg_doc_len = 0.0;
  std::unordered_map<std::string, std::size_t> doc_freq;

  static CorpusStats build(const std::vector<TokenStream>& docs);
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 with the +1 idf smoothing (never negative). Returns 0
/// when no query term occurs in the document.
double bm25(const TokenStream& query, const TokenStream& doc,
            const CorpusStats& stats, const Bm25Params& params = {});

/// Sparse term->weight vector.
using TermVector = std::unordered_map<std::string, double>;

TermVector term_counts(const TokenStream& tokens);

/// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
double smooth_idf(std::size_t doc_count, std::size_t doc_freq);

/// Cosine similarity of two sparse vectors; 0 if either is zero.
double cosine(const TermVector& a, const TermVector& b);

}  // namespace vfloc
