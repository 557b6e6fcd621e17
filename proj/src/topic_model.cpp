#include "tagsum/topic_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "tagsum/binary_io.hpp"

namespace tagsum::topic {

namespace {

int sample_index(std::mt19937_64& rng, const std::vector<double>& cumulative) {
  const double u = std::uniform_real_distribution<double>(0.0, cumulative.back())(rng);
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

void validate(const std::vector<Document>& docs, std::size_t vocab_size) {
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (int w : docs[d])
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size)
        throw std::invalid_argument("lda: document " + std::to_string(d) + " has word id " +
                                    std::to_string(w) + " outside [0, " +
                                    std::to_string(vocab_size) + ")");
}

}  // namespace

// ---- persistence ----------------------------------------------------------

void TopicModel::save(const std::filesystem::path& manifest) const {
  std::filesystem::path sidecar = manifest;
  sidecar.replace_extension(".bin");
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["K"] = num_topics;
  j["V"] = vocab_size;
  j["alpha"] = alpha;
  j["eta"] = eta;
  j["beta_file"] = sidecar.filename().string();
  if (!vocab_file.empty()) j["vocab"] = vocab_file;
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write topic model " + manifest.string());
  out << j.dump(2) << '\n';
  std::vector<char> bytes;
  io::append_f64_le(bytes, beta);
  io::write_file(sidecar, bytes);
}

TopicModel TopicModel::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot read topic model " + manifest.string());
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format_version", 0) != kFormatVersion)
    throw std::runtime_error("topic model " + manifest.string() + ": unsupported format_version " +
                             j.value("format_version", nlohmann::json(nullptr)).dump());
  TopicModel m;
  m.num_topics = j.at("K").get<std::size_t>();
  m.vocab_size = j.at("V").get<std::size_t>();
  m.alpha = j.at("alpha").get<double>();
  m.eta = j.at("eta").get<double>();
  m.vocab_file = j.value("vocab", std::string());
  const auto bytes = io::read_file(manifest.parent_path() / j.at("beta_file").get<std::string>());
  const std::size_t n = m.num_topics * m.vocab_size;
  if (bytes.size() != n * 8)
    throw std::runtime_error("topic model " + manifest.string() + ": sidecar holds " +
                             std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(n * 8));
  m.beta = io::decode_f64_le(bytes.data(), n);
  return m;
}

// ---- Gibbs state ----------------------------------------------------------

bool GibbsState::consistent(const std::vector<Document>& docs, std::size_t K,
                            std::size_t V) const {
  std::vector<int> kw(K * V, 0), dk(docs.size() * K, 0), k_tot(K, 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const int k = z[d][i];
      ++kw[k * V + docs[d][i]];
      ++dk[d * K + k];
      ++k_tot[k];
    }
  }
  return kw == n_kw && dk == n_dk && k_tot == n_k;
}

GibbsSampler::GibbsSampler(std::vector<Document> docs, std::size_t vocab_size,
                           const LdaOptions& options)
    : docs_(std::move(docs)),
      K_(options.num_topics),
      V_(vocab_size),
      alpha_(options.alpha > 0 ? options.alpha : 50.0 / static_cast<double>(options.num_topics)),
      eta_(options.eta),
      rng_(options.seed),
      weights_(options.num_topics) {
  if (K_ < 1) throw std::invalid_argument("lda: num_topics must be >= 1");
  if (!(eta_ > 0)) throw std::invalid_argument("lda: eta must be positive");
  if (docs_.empty()) throw std::invalid_argument("lda: empty corpus");
  if (V_ < 1) throw std::invalid_argument("lda: empty vocabulary");
  validate(docs_, V_);

  state_.n_kw.assign(K_ * V_, 0);
  state_.n_dk.assign(docs_.size() * K_, 0);
  state_.n_k.assign(K_, 0);
  state_.z.resize(docs_.size());
  std::uniform_int_distribution<int> pick(0, static_cast<int>(K_) - 1);
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    state_.z[d].resize(docs_[d].size());
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int k = pick(rng_);
      state_.z[d][i] = k;
      ++state_.n_kw[k * V_ + docs_[d][i]];
      ++state_.n_dk[d * K_ + k];
      ++state_.n_k[k];
    }
  }
}

void GibbsSampler::sweep() {
  const double v_eta = static_cast<double>(V_) * eta_;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    int* dk = &state_.n_dk[d * K_];
    for (std::size_t i = 0; i < docs_[d].size(); ++i) {
      const int w = docs_[d][i];
      int k = state_.z[d][i];
      --state_.n_kw[k * V_ + w];
      --dk[k];
      --state_.n_k[k];

      double acc = 0.0;
      for (std::size_t t = 0; t < K_; ++t) {
        acc += (dk[t] + alpha_) * (state_.n_kw[t * V_ + w] + eta_) / (state_.n_k[t] + v_eta);
        weights_[t] = acc;
      }
      k = sample_index(rng_, weights_);

      state_.z[d][i] = k;
      ++state_.n_kw[k * V_ + w];
      ++dk[k];
      ++state_.n_k[k];
    }
  }
}

TopicModel GibbsSampler::model() const {
  TopicModel m;
  m.num_topics = K_;
  m.vocab_size = V_;
  m.alpha = alpha_;
  m.eta = eta_;
  m.beta.resize(K_ * V_);
  const double v_eta = static_cast<double>(V_) * eta_;
  for (std::size_t k = 0; k < K_; ++k)
    for (std::size_t w = 0; w < V_; ++w)
      m.beta[k * V_ + w] = (state_.n_kw[k * V_ + w] + eta_) / (state_.n_k[k] + v_eta);
  return m;
}

double GibbsSampler::log_likelihood() const {
  const TopicModel m = model();
  double total = 0.0;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    const double denom = static_cast<double>(docs_[d].size()) + static_cast<double>(K_) * alpha_;
    for (int w : docs_[d]) {
      double p = 0.0;
      for (std::size_t k = 0; k < K_; ++k)
        p += (state_.n_dk[d * K_ + k] + alpha_) / denom * m.beta_at(k, w);
      total += std::log(p);
    }
  }
  return total;
}

// ---- public API -----------------------------------------------------------

TopicModel fit_lda(const std::vector<Document>& docs, std::size_t vocab_size,
                   const LdaOptions& options, std::vector<double>* log_likelihood_trace) {
  if (options.iterations < 1) throw std::invalid_argument("fit_lda: iterations must be >= 1");
  GibbsSampler sampler(docs, vocab_size, options);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    sampler.sweep();
    if (log_likelihood_trace) log_likelihood_trace->push_back(sampler.log_likelihood());
  }
  return sampler.model();
}

TopicVector infer_theta(const TopicModel& model, const Document& doc, std::size_t iterations,
                        std::uint64_t seed) {
  const std::size_t K = model.num_topics;
  const double alpha = model.alpha;
  if (doc.empty()) return TopicVector(K, 1.0 / static_cast<double>(K));
  validate({doc}, model.vocab_size);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(K) - 1);
  std::vector<int> z(doc.size()), n_k(K, 0);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    z[i] = pick(rng);
    ++n_k[z[i]];
  }
  std::vector<double> weights(K);
  for (std::size_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      --n_k[z[i]];
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        acc += (n_k[k] + alpha) * model.beta_at(k, doc[i]);
        weights[k] = acc;
      }
      z[i] = sample_index(rng, weights);
      ++n_k[z[i]];
    }
  }
  TopicVector theta(K);
  const double denom = static_cast<double>(doc.size()) + static_cast<double>(K) * alpha;
  for (std::size_t k = 0; k < K; ++k) theta[k] = (n_k[k] + alpha) / denom;
  return theta;
}

double log_likelihood(const TopicModel& model, const std::vector<Document>& docs,
                      std::size_t iterations, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const TopicVector theta = infer_theta(model, docs[d], iterations, seed + d);
    for (int w : docs[d]) {
      double p = 0.0;
      for (std::size_t k = 0; k < model.num_topics; ++k) p += theta[k] * model.beta_at(k, w);
      total += std::log(p);
    }
  }
  return total;
}

std::vector<std::string> top_words(const TopicModel& model, const corpus::Vocabulary& vocab,
                                   std::size_t topic, std::size_t n) {
  if (topic >= model.num_topics)
    throw std::out_of_range("top_words: topic " + std::to_string(topic) + " out of range [0, " +
                            std::to_string(model.num_topics) + ")");
  if (vocab.size() != model.vocab_size + corpus::kNumSpecials)
    throw std::invalid_argument("top_words: vocabulary does not match topic model");
  std::vector<int> order(model.vocab_size);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ba = model.beta_at(topic, a), bb = model.beta_at(topic, b);
    if (ba != bb) return ba > bb;
    return vocab.token(a + corpus::kNumSpecials) < vocab.token(b + corpus::kNumSpecials);
  });
  order.resize(std::min(n, order.size()));
  std::vector<std::string> out;
  for (int w : order) out.push_back(vocab.token(w + corpus::kNumSpecials));
  return out;
}

Document to_topic_document(const std::vector<int>& vocab_ids) {
  Document doc;
  for (int id : vocab_ids)
    if (id >= corpus::kNumSpecials) doc.push_back(id - corpus::kNumSpecials);
  return doc;
}

Document to_topic_document(const corpus::Tokens& tokens, const corpus::Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return to_topic_document(ids);
}

}  // namespace tagsum::topic
