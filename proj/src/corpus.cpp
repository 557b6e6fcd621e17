#include "tagsum/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace tagsum::corpus {

namespace {

bool is_split_mark(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '"': case '\'': case '(': case ')': case '-':
      return true;
    default:
      return false;
  }
}

bool is_special(const std::string& token) {
  for (const char* s : kSpecialTokens)
    if (token == s) return true;
  return false;
}

}  // namespace

Tokens tokenize(const std::string& text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_split_mark(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::string detokenize(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool is_sentence_end(const std::string& token) {
  return token == "." || token == "!" || token == "?";
}

// ---- Vocabulary -----------------------------------------------------------

Vocabulary::Vocabulary() {
  for (const char* s : kSpecialTokens) push(s);
}

void Vocabulary::push(const std::string& token) {
  if (token_to_id_.count(token))
    throw std::invalid_argument("vocabulary: duplicate token '" + token + "'");
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (t.empty() || is_special(t))
      throw std::invalid_argument("vocabulary: invalid token '" + t + "'");
    v.push(t);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
  return id_to_token_[id];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) out << id_to_token_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(tokens);
}

Vocabulary build_vocab(const std::vector<DocumentPair>& corpus, std::size_t max_size,
                       std::size_t min_freq) {
  if (max_size < kNumSpecials + 1)
    throw std::invalid_argument("build_vocab: max_size must be at least 5, got " +
                                std::to_string(max_size));
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : corpus) {
    for (const auto& t : pair.article) ++counts[t];
    for (const auto& t : pair.summary) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts)
    if (n >= min_freq && !is_special(tok)) ranked.emplace_back(tok, n);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - kNumSpecials);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary::from_tokens(tokens);
}

// ---- encoding -------------------------------------------------------------

EncodedPair encode_pair(const DocumentPair& pair, const Vocabulary& vocab,
                        std::size_t max_src_len, std::size_t max_tgt_len) {
  EncodedPair enc;
  enc.id = pair.id;
  const int V = static_cast<int>(vocab.size());
  std::unordered_map<std::string, int> oov_index;

  std::size_t src_len = pair.article.size();
  if (max_src_len > 0) src_len = std::min(src_len, max_src_len);
  for (std::size_t i = 0; i < src_len; ++i) {
    const std::string& tok = pair.article[i];
    if (vocab.contains(tok)) {
      const int id = vocab.id(tok);
      enc.src_ids.push_back(id);
      enc.src_extended_ids.push_back(id);
      continue;
    }
    auto [it, fresh] = oov_index.emplace(tok, static_cast<int>(enc.oov_list.size()));
    if (fresh) enc.oov_list.push_back(tok);
    enc.src_ids.push_back(kUnk);
    enc.src_extended_ids.push_back(V + it->second);
  }

  std::size_t tgt_len = pair.summary.size();
  if (max_tgt_len > 0) tgt_len = std::min(tgt_len, max_tgt_len);
  enc.tgt_ids.push_back(kBos);
  enc.tgt_extended_ids.push_back(kBos);
  for (std::size_t i = 0; i < tgt_len; ++i) {
    const std::string& tok = pair.summary[i];
    if (vocab.contains(tok)) {
      const int id = vocab.id(tok);
      enc.tgt_ids.push_back(id);
      enc.tgt_extended_ids.push_back(id);
    } else {
      enc.tgt_ids.push_back(kUnk);
      auto it = oov_index.find(tok);
      enc.tgt_extended_ids.push_back(it == oov_index.end() ? kUnk : V + it->second);
    }
  }
  enc.tgt_ids.push_back(kEos);
  enc.tgt_extended_ids.push_back(kEos);
  return enc;
}

std::string extended_token(int extended_id, const Vocabulary& vocab,
                           const std::vector<std::string>& oov_list) {
  const int V = static_cast<int>(vocab.size());
  if (extended_id < V) return vocab.token(extended_id);
  const std::size_t j = static_cast<std::size_t>(extended_id - V);
  if (j >= oov_list.size())
    throw std::out_of_range("extended id " + std::to_string(extended_id) + " has no source OOV");
  return oov_list[j];
}

// ---- JSONL ----------------------------------------------------------------

std::vector<DocumentPair> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset " + path.string());
  std::vector<DocumentPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw std::runtime_error(where + "expected a JSON object");
    for (const char* key : {"article", "summary"})
      if (!obj.contains(key) || !obj[key].is_string())
        throw std::runtime_error(where + "missing string field \"" + key + "\"");
    DocumentPair p;
    p.article = tokenize(obj["article"].get<std::string>());
    p.summary = tokenize(obj["summary"].get<std::string>());
    if (obj.contains("id") && obj["id"].is_string())
      p.id = obj["id"].get<std::string>();
    else if (obj.contains("id") && obj["id"].is_number_integer())
      p.id = std::to_string(obj["id"].get<long long>());
    else
      p.id = std::to_string(line_no);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<DocumentPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto& p : pairs) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["article"] = detokenize(p.article);
    obj["summary"] = detokenize(p.summary);
    out << obj.dump() << '\n';
  }
}

// ---- synthetic corpora ----------------------------------------------------

SyntheticCorpus generate_synthetic(const SyntheticOptions& opt) {
  const std::size_t K = opt.num_topics, V = opt.vocab_size;
  if (K < 1) throw std::invalid_argument("generate_synthetic: need at least one topic");
  if (V < 3 * K)
    throw std::invalid_argument("generate_synthetic: vocab_size must be >= 3 * num_topics");
  if (opt.doc_len < 1 || opt.summary_len < 1)
    throw std::invalid_argument("generate_synthetic: document and summary lengths must be >= 1");
  if (opt.summary_len > V)
    throw std::invalid_argument("generate_synthetic: summary_len must not exceed vocab_size");
  if (!(opt.doc_topic_alpha > 0))
    throw std::invalid_argument("generate_synthetic: doc_topic_alpha must be positive");

  SyntheticCorpus out;
  out.words.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%03zu", v);
    out.words[v] = buf;
  }

  // Block k = [k*B, (k+1)*B): 90% of the topic's mass with a decaying profile,
  // the rest spread uniformly over the whole vocabulary.
  const std::size_t B = V / K;
  const std::size_t heads = std::max<std::size_t>(1, B / 3);
  constexpr double kBlockMass = 0.9;
  out.beta.assign(K, std::vector<double>(V, (1.0 - kBlockMass) / static_cast<double>(V)));
  out.topic_words.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    double z = 0.0;
    for (std::size_t r = 0; r < B; ++r) z += 1.0 / (1.0 + 0.3 * static_cast<double>(r));
    for (std::size_t r = 0; r < B; ++r)
      out.beta[k][k * B + r] += kBlockMass / (1.0 + 0.3 * static_cast<double>(r)) / z;
    for (std::size_t r = 0; r < heads; ++r) out.topic_words[k].push_back(static_cast<int>(k * B + r));
  }

  std::mt19937_64 rng(opt.seed);
  std::gamma_distribution<double> gamma(opt.doc_topic_alpha, 1.0);
  std::vector<std::discrete_distribution<int>> word_dist;
  for (const auto& row : out.beta) word_dist.emplace_back(row.begin(), row.end());

  for (std::size_t d = 0; d < opt.num_docs; ++d) {
    std::vector<double> theta(K, 1.0);
    if (K > 1) {
      double total = 0.0;
      while (!(total > 0.0)) {
        total = 0.0;
        for (auto& t : theta) total += (t = gamma(rng));
      }
      for (auto& t : theta) t /= total;
    }
    std::discrete_distribution<int> topic_dist(theta.begin(), theta.end());
    const std::size_t dominant =
        static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
    const auto& head = out.topic_words[dominant];
    const int exogenous = head[std::uniform_int_distribution<std::size_t>(0, head.size() - 1)(rng)];

    auto draw = [&](bool avoid_exogenous) {
      for (;;) {
        const int w = word_dist[topic_dist(rng)](rng);
        if (!avoid_exogenous || w != exogenous) return w;
      }
    };

    DocumentPair pair;
    pair.id = "syn" + std::to_string(d);
    for (std::size_t i = 0; i < opt.doc_len; ++i) pair.article.push_back(out.words[draw(true)]);
    // Summary words are distinct, as content words in real summaries rarely repeat.
    std::vector<int> summary;
    while (summary.size() < opt.summary_len) {
      const int w = draw(false);
      if (std::find(summary.begin(), summary.end(), w) == summary.end()) summary.push_back(w);
    }
    if (std::find(summary.begin(), summary.end(), exogenous) == summary.end())
      summary[std::uniform_int_distribution<std::size_t>(0, summary.size() - 1)(rng)] = exogenous;
    // Canonical order (by word index) so the target sequence is a function of the bag.
    std::sort(summary.begin(), summary.end());
    for (int w : summary) pair.summary.push_back(out.words[w]);

    out.pairs.push_back(std::move(pair));
    out.theta.push_back(std::move(theta));
  }
  return out;
}

}  // namespace tagsum::corpus
