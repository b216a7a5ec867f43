#include "moodscope/textfeat.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "moodscope/random.hpp"
#include "moodscope/text.hpp"

namespace moodscope {

std::vector<std::string> extract_ngrams(std::span<const std::string> tokens, int max_n) {
  std::vector<std::string> out;
  for (int n = 1; n <= max_n; ++n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
        gram.push_back(' ');
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

std::ptrdiff_t NgramVocabulary::index_of(const std::string& term) const {
  auto it = index_.find(term);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

NgramVocabulary build_vocab(std::span<const std::string> documents, std::size_t k, int max_n) {
  if (k < 1) throw std::invalid_argument("vocabulary size must be >= 1");
  if (documents.empty()) throw std::invalid_argument("vocabulary needs a nonempty corpus");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& doc : documents)
    for (auto& gram : extract_ngrams(tokenize(doc), max_n)) ++counts[std::move(gram)];

  std::vector<std::pair<std::string, std::int64_t>> entries(counts.begin(), counts.end());
  auto by_rank = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
  if (entries.size() > k) {
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end(), by_rank);
    entries.resize(k);
  } else {
    std::sort(entries.begin(), entries.end(), by_rank);
  }
  NgramVocabulary vocab;
  vocab.max_n = max_n;
  for (auto& [term, freq] : entries) {
    vocab.index_[term] = vocab.terms.size();
    vocab.terms.push_back(term);
    vocab.frequencies.push_back(freq);
  }
  return vocab;
}

Eigen::MatrixXd ngram_features(std::span<const std::string> documents, const NgramVocabulary& vocab) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(documents.size()),
                                              static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto grams = extract_ngrams(tokenize(documents[d]), vocab.max_n);
    if (grams.empty()) continue;
    for (const auto& g : grams) {
      const auto idx = vocab.index_of(g);
      if (idx >= 0) out(static_cast<Eigen::Index>(d), idx) += 1.0;
    }
    out.row(static_cast<Eigen::Index>(d)) /= static_cast<double>(grams.size());
  }
  return out;
}

LdaModel fit_lda(std::span<const std::string> documents, const LdaOptions& options) {
  if (documents.empty()) throw std::invalid_argument("LDA needs a nonempty corpus");
  if (options.topics < 2) throw std::invalid_argument("LDA needs at least two topics");
  if (options.iterations < 0 || options.beta <= 0.0) throw std::invalid_argument("invalid LDA options");

  LdaModel model;
  model.topics = options.topics;
  model.alpha = options.alpha > 0.0 ? options.alpha : 50.0 / options.topics;
  model.beta = options.beta;
  model.iterations = options.iterations;
  model.seed = options.seed;

  // Vocabulary in lexicographic order keeps word ids independent of hashing.
  std::vector<std::vector<std::string>> tokens;
  std::map<std::string, int> word_ids;
  for (const auto& doc : documents) {
    tokens.push_back(tokenize(doc));
    for (const auto& t : tokens.back()) word_ids.emplace(t, 0);
  }
  int next_id = 0;
  for (auto& [word, id] : word_ids) {
    id = next_id++;
    model.vocabulary.push_back(word);
  }
  const int K = options.topics;
  const int V = std::max(1, next_id);
  const auto D = documents.size();

  std::vector<std::vector<int>> words(D);
  for (std::size_t d = 0; d < D; ++d)
    for (const auto& t : tokens[d]) words[d].push_back(word_ids[t]);

  Eigen::MatrixXi doc_topic = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(D), K);
  Eigen::MatrixXi topic_word = Eigen::MatrixXi::Zero(K, V);
  Eigen::VectorXi topic_total = Eigen::VectorXi::Zero(K);
  Rng rng(options.seed);
  model.assignments.resize(D);
  for (std::size_t d = 0; d < D; ++d) {
    model.assignments[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      const int z = static_cast<int>(rng.uniform_int(0, K - 1));
      model.assignments[d][i] = z;
      ++doc_topic(static_cast<Eigen::Index>(d), z);
      ++topic_word(z, words[d][i]);
      ++topic_total(z);
    }
  }

  const double alpha = model.alpha;
  const double beta = model.beta;
  const double v_beta = V * beta;
  std::vector<double> weights(static_cast<std::size_t>(K));
  for (int iter = 0; iter < options.iterations; ++iter) {
    for (std::size_t d = 0; d < D; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const int w = words[d][i];
        int z = model.assignments[d][i];
        --doc_topic(di, z);
        --topic_word(z, w);
        --topic_total(z);
        for (int k = 0; k < K; ++k)
          weights[static_cast<std::size_t>(k)] = (doc_topic(di, k) + alpha) * (topic_word(k, w) + beta) / (topic_total(k) + v_beta);
        z = static_cast<int>(rng.categorical(weights));
        model.assignments[d][i] = z;
        ++doc_topic(di, z);
        ++topic_word(z, w);
        ++topic_total(z);
      }
    }
  }

  model.doc_topic.resize(static_cast<Eigen::Index>(D), K);
  for (std::size_t d = 0; d < D; ++d) {
    const double n = static_cast<double>(words[d].size());
    for (int k = 0; k < K; ++k)
      model.doc_topic(static_cast<Eigen::Index>(d), k) = (doc_topic(static_cast<Eigen::Index>(d), k) + alpha) / (n + K * alpha);
  }
  model.topic_word.resize(K, V);
  for (int k = 0; k < K; ++k)
    for (int w = 0; w < V; ++w) model.topic_word(k, w) = (topic_word(k, w) + beta) / (topic_total(k) + v_beta);
  return model;
}

void CategoryLexicon::add_category(std::string name, std::vector<std::string> entries) {
  if (name.empty()) throw std::invalid_argument("empty category name");
  if (entries.empty()) throw std::invalid_argument("category '" + name + "' has no entries");
  if (std::find(names_.begin(), names_.end(), name) != names_.end())
    throw std::invalid_argument("duplicate category '" + name + "'");
  std::vector<std::string> words, stems;
  for (auto& e : entries) {
    for (auto& c : e)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (e.empty()) continue;
    if (e.back() == '*') {
      e.pop_back();
      stems.push_back(std::move(e));
    } else {
      words.push_back(std::move(e));
    }
  }
  std::sort(words.begin(), words.end());
  names_.push_back(std::move(name));
  words_.push_back(std::move(words));
  stems_.push_back(std::move(stems));
}

CategoryLexicon CategoryLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open category lexicon " + path.string());
  CategoryLexicon lex;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected category<TAB>entries");
    std::vector<std::string> entries;
    std::size_t start = tab + 1;
    while (start <= line.size()) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      std::string entry = line.substr(start, comma - start);
      entry.erase(0, entry.find_first_not_of(' '));
      while (!entry.empty() && entry.back() == ' ') entry.pop_back();
      if (!entry.empty()) entries.push_back(std::move(entry));
      start = comma + 1;
    }
    try {
      lex.add_category(line.substr(0, tab), std::move(entries));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return lex;
}

bool CategoryLexicon::matches(std::size_t category, std::string_view token) const {
  const auto& words = words_[category];
  if (std::binary_search(words.begin(), words.end(), token, [](const auto& a, const auto& b) {
        return std::string_view(a) < std::string_view(b);
      }))
    return true;
  for (const auto& stem : stems_[category])
    if (token.size() >= stem.size() && token.substr(0, stem.size()) == stem) return true;
  return false;
}

CategoryFeatures category_features(std::string_view text, const CategoryLexicon& lexicon) {
  const auto tokens = tokenize(text);
  CategoryFeatures out;
  out.proportions = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lexicon.size()));
  out.word_count = static_cast<double>(tokens.size());
  if (tokens.empty()) return out;
  for (const auto& t : tokens)
    for (std::size_t c = 0; c < lexicon.size(); ++c)
      if (lexicon.matches(c, t)) out.proportions(static_cast<Eigen::Index>(c)) += 1.0;
  out.proportions /= static_cast<double>(tokens.size());
  return out;
}

nlohmann::json to_json(const NgramVocabulary& vocab) {
  nlohmann::json j;
  j["max_n"] = vocab.max_n;
  j["terms"] = vocab.terms;
  j["frequencies"] = vocab.frequencies;
  return j;
}

NgramVocabulary vocab_from_json(const nlohmann::json& j) {
  NgramVocabulary v;
  v.max_n = j.at("max_n").get<int>();
  v.terms = j.at("terms").get<std::vector<std::string>>();
  v.frequencies = j.at("frequencies").get<std::vector<std::int64_t>>();
  if (v.terms.size() != v.frequencies.size()) throw std::invalid_argument("vocabulary terms/frequencies mismatch");
  for (std::size_t i = 0; i < v.terms.size(); ++i) v.index_[v.terms[i]] = i;
  return v;
}

}  // namespace moodscope
