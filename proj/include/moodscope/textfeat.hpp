#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace moodscope {

/// Space-joined n-grams of orders 1..max_n, in text order.
std::vector<std::string> extract_ngrams(std::span<const std::string> tokens, int max_n = 3);

/// The K most frequent n-grams across the corpus; ties in frequency are
/// ordered lexicographically.
struct NgramVocabulary {
  int max_n = 3;
  std::vector<std::string> terms;
  std::vector<std::int64_t> frequencies;

  std::size_t size() const { return terms.size(); }
  std::ptrdiff_t index_of(const std::string& term) const;

 private:
  friend NgramVocabulary build_vocab(std::span<const std::string>, std::size_t, int);
  friend NgramVocabulary vocab_from_json(const nlohmann::json&);
  std::unordered_map<std::string, std::size_t> index_;
};

NgramVocabulary build_vocab(std::span<const std::string> documents, std::size_t k, int max_n = 3);

/// Per-document relative frequencies over the vocabulary: count of each term
/// divided by the document's total n-gram count (in or out of vocabulary).
Eigen::MatrixXd ngram_features(std::span<const std::string> documents, const NgramVocabulary& vocab);

struct LdaOptions {
  int topics = 30;
  int iterations = 1000;
  double alpha = -1.0;  ///< negative means 50 / topics
  double beta = 0.01;
  std::uint64_t seed = 0;
};

struct LdaModel {
  int topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> vocabulary;
  Eigen::MatrixXd topic_word;  ///< topics x vocabulary, rows sum to 1
  Eigen::MatrixXd doc_topic;   ///< documents x topics, rows sum to 1
  std::vector<std::vector<int>> assignments;  ///< topic of every token, per document
};

/// Collapsed Gibbs sampling over unigram tokens. Empty documents get uniform
/// topic proportions.
LdaModel fit_lda(std::span<const std::string> documents, const LdaOptions& options);

/// Category -> words; an entry ending in '*' is a stem matching any token it
/// prefixes.
class CategoryLexicon {
 public:
  void add_category(std::string name, std::vector<std::string> entries);

  /// Each line: `category<TAB>word1,word2,stem3*`.
  static CategoryLexicon load(const std::filesystem::path& path);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  bool matches(std::size_t category, std::string_view token) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> words_;
  std::vector<std::vector<std::string>> stems_;
};

struct CategoryFeatures {
  Eigen::VectorXd proportions;  ///< fraction of tokens matching each category
  double word_count = 0.0;
};

CategoryFeatures category_features(std::string_view text, const CategoryLexicon& lexicon);

nlohmann::json to_json(const NgramVocabulary& vocab);
NgramVocabulary vocab_from_json(const nlohmann::json& j);

}  // namespace moodscope
