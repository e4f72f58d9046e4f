#include "vfloc/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace vfloc {

namespace {

const std::unordered_set<std::string_view>& stop_words() {
  static const std::unordered_set<std::string_view> kStop = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an",
      "and", "any", "are", "as", "at", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "can", "cannot",
      "could", "did", "do", "does", "doing", "down", "during", "each", "few",
      "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
      "in", "into", "is", "it", "its", "itself", "just", "may", "me", "might",
      "more", "most", "must", "my", "myself", "no", "nor", "not", "now", "of",
      "off", "on", "once", "only", "or", "other", "ought", "our", "ours",
      "ourselves", "out", "over", "own", "same", "shall", "she", "should",
      "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
      "themselves", "then", "there", "these", "they", "this", "those",
      "through", "to", "too", "under", "until", "up", "upon", "very", "via",
      "was", "we", "were", "what", "when", "where", "which", "while", "who",
      "whom", "why", "will", "with", "would", "you", "your", "yours",
      "yourself", "yourselves",
  };
  return kStop;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c); });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Ends consonant-vowel-consonant, final consonant not w/x/y.
bool ends_cvc(std::string_view s) {
  if (s.size() < 3) return false;
  char c0 = s[s.size() - 3], c1 = s[s.size() - 2], c2 = s[s.size() - 1];
  return !is_vowel(c0) && is_vowel(c1) && !is_vowel(c2) && c2 != 'w' &&
         c2 != 'x' && c2 != 'y';
}

// After stripping -ed/-ing, restore the stem to citation form.
std::string repair_stem(std::string stem) {
  if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz"))
    return stem + "e";
  if (stem.size() >= 2 && stem.back() == stem[stem.size() - 2] &&
      !is_vowel(stem.back()) && stem.back() != 'l' && stem.back() != 's' &&
      stem.back() != 'z') {
    stem.pop_back();  // stopped -> stop
    return stem;
  }
  if (ends_cvc(stem)) return stem + "e";  // stored -> store
  return stem;
}

}  // namespace

std::string lemmatize(std::string_view word) {
  std::string w(word);
  if (w.size() < 3) return w;

  // Plural endings.
  if (ends_with(w, "sses")) {
    w.erase(w.size() - 2);
  } else if (ends_with(w, "ies") && w.size() > 4) {
    w.erase(w.size() - 3);
    w += 'y';
  } else if (ends_with(w, "xes") || ends_with(w, "ches") ||
             ends_with(w, "shes") || ends_with(w, "zzes") ||
             ends_with(w, "oes")) {
    w.erase(w.size() - 2);
  } else if (w.back() == 's' && !ends_with(w, "ss") && !ends_with(w, "us") &&
             !ends_with(w, "is")) {
    w.pop_back();
  }

  // Past tense and gerund.
  if (ends_with(w, "ied") && w.size() > 4) {
    w.erase(w.size() - 3);
    w += 'y';
  } else if (ends_with(w, "ed") && w.size() > 4 &&
             has_vowel(std::string_view(w).substr(0, w.size() - 2))) {
    w.erase(w.size() - 2);
    w = repair_stem(std::move(w));
  } else if (ends_with(w, "ing") && w.size() > 5 &&
             has_vowel(std::string_view(w).substr(0, w.size() - 3))) {
    w.erase(w.size() - 3);
    w = repair_stem(std::move(w));
  }
  return w;
}

bool is_stop_word(std::string_view word) {
  return stop_words().count(word) > 0;
}

std::vector<std::string> split_identifier(std::string_view ident) {
  std::vector<std::string> raw;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) raw.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < ident.size(); ++i) {
    char c = ident[i];
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      char prev = cur.back();
      bool prev_lower = std::islower(static_cast<unsigned char>(prev));
      bool prev_upper = std::isupper(static_cast<unsigned char>(prev));
      bool prev_digit = std::isdigit(static_cast<unsigned char>(prev));
      bool c_upper = std::isupper(static_cast<unsigned char>(c));
      bool c_digit = std::isdigit(static_cast<unsigned char>(c));
      bool c_lower = std::islower(static_cast<unsigned char>(c));
      if ((prev_lower && c_upper) || (prev_digit && !c_digit) ||
          (!prev_digit && c_digit)) {
        flush();
      } else if (prev_upper && c_lower && cur.size() > 1) {
        // "XMLParser": split before the last upper of an acronym run.
        char carry = cur.back();
        cur.pop_back();
        flush();
        cur += carry;
      }
    }
    cur += c;
  }
  flush();

  // Single-letter fragments fuse forward ("X","Stream" -> "XStream").
  std::vector<std::string> out;
  std::string pending;
  for (auto& frag : raw) {
    if (frag.size() == 1 && std::isalpha(static_cast<unsigned char>(frag[0]))) {
      pending += frag;
      continue;
    }
    out.push_back(pending + frag);
    pending.clear();
  }
  if (!pending.empty()) {
    if (out.empty())
      out.push_back(pending);
    else
      out.back() += pending;
  }
  return out;
}

TokenStream sanitize(std::string_view raw) {
  TokenStream tokens;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!std::isalnum(static_cast<unsigned char>(raw[i])) && raw[i] != '_' &&
        raw[i] != '$') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && (std::isalnum(static_cast<unsigned char>(raw[j])) ||
                              raw[j] == '_' || raw[j] == '$')) {
      ++j;
    }
    for (auto& frag : split_identifier(raw.substr(i, j - i))) {
      std::transform(frag.begin(), frag.end(), frag.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
      if (frag.size() < 2) continue;
      if (std::all_of(frag.begin(), frag.end(), [](unsigned char c) {
            return std::isdigit(c);
          }))
        continue;
      if (is_stop_word(frag)) continue;
      std::string lemma = lemmatize(frag);
      if (lemma.size() < 2 || is_stop_word(lemma)) continue;
      tokens.push_back(std::move(lemma));
    }
    i = j;
  }
  return tokens;
}

CorpusStats CorpusStats::build(const std::vector<TokenStream>& docs) {
  CorpusStats stats;
  stats.doc_count = docs.size();
  std::size_t total_len = 0;
  for (const auto& doc : docs) {
    total_len += doc.size();
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      if (seen.insert(t).second) ++stats.doc_freq[t];
    }
  }
  stats.avg_doc_len =
      docs.empty() ? 0.0 : static_cast<double>(total_len) / docs.size();
  return stats;
}

double bm25(const TokenStream& query, const TokenStream& doc,
            const CorpusStats& stats, const Bm25Params& params) {
  if (doc.empty() || query.empty() || stats.doc_count == 0) return 0.0;
  TermVector tf = term_counts(doc);
  double dl = static_cast<double>(doc.size());
  double norm =
      params.k1 * (1.0 - params.b + params.b * dl / std::max(stats.avg_doc_len, 1e-12));
  double score = 0.0;
  std::unordered_set<std::string_view> seen;
  for (const auto& term : query) {
    if (!seen.insert(term).second) continue;
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    auto df_it = stats.doc_freq.find(term);
    double df = df_it == stats.doc_freq.end() ? 0.0
                                              : static_cast<double>(df_it->second);
    double idf =
        std::log(1.0 + (stats.doc_count - df + 0.5) / (df + 0.5));
    double f = it->second;
    score += idf * f * (params.k1 + 1.0) / (f + norm);
  }
  return score;
}

TermVector term_counts(const TokenStream& tokens) {
  TermVector counts;
  for (const auto& t : tokens) counts[t] += 1.0;
  return counts;
}

double smooth_idf(std::size_t doc_count, std::size_t doc_freq) {
  return std::log((1.0 + doc_count) / (1.0 + doc_freq)) + 1.0;
}

double cosine(const TermVector& a, const TermVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) {
    na += w * w;
    auto it = b.find(t);
    if (it != b.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : b) nb += w * w;
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace vfloc
