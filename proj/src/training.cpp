#include "tagsum/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tagsum::train {

using namespace tagsum::ad;

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw std::invalid_argument("train: learning rate must be positive");
  if (!(clip_norm > 0)) throw std::invalid_argument("train: clip norm must be positive");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    throw std::invalid_argument("train: Adam betas must lie in [0, 1)");
  if (!(adam_epsilon > 0)) throw std::invalid_argument("train: Adam epsilon must be positive");
  if (coverage_weight < 0) throw std::invalid_argument("train: coverage weight must be >= 0");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (target_nll < 0) throw std::invalid_argument("train: target NLL must be >= 0");
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState st;
  for (const auto& [name, t] : params.named()) {
    st.m.emplace_back(t->size(), 0.0);
    st.v.emplace_back(t->size(), 0.0);
  }
  return st;
}

SequenceLoss sequence_loss(const ModelParams& params, const corpus::EncodedPair& pair,
                           const std::optional<topic::TopicVector>& theta,
                           const TrainConfig& config) {
  if (pair.tgt_extended_ids.size() < 3)
    throw std::invalid_argument("sequence_loss: pair '" + pair.id + "' has an empty summary");
  const model::SourceContext source = model::prepare_source(params, pair, theta, config.mode);
  model::StepOptions opts{config.mode, config.use_coverage, config.disable_topic};
  model::DecoderState state = model::initial_state(params, source);

  std::vector<Tensor> nll_terms, coverage_terms;
  for (std::size_t t = 1; t < pair.tgt_extended_ids.size(); ++t) {
    const int target = pair.tgt_extended_ids[t];
    model::StepOutput out = model::decode_step(params, state, source, opts);
    const Tensor p = slice(out.probs, static_cast<std::size_t>(target),
                           static_cast<std::size_t>(target) + 1);
    nll_terms.push_back(scalar_mul(log(clamp_min(p, kProbabilityFloor)), -1.0));
    if (config.use_coverage) coverage_terms.push_back(out.coverage_loss);
    state = std::move(out.state);
    state.prev_token = target;
  }

  SequenceLoss loss;
  loss.steps = nll_terms.size();
  const double inv = 1.0 / static_cast<double>(loss.steps);
  Tensor nll_sum = sum(concat(nll_terms));
  loss.nll = nll_sum.item() * inv;
  Tensor total = nll_sum;
  if (!coverage_terms.empty()) {
    Tensor cov_sum = sum(concat(coverage_terms));
    loss.coverage = cov_sum.item() * inv;
    total = add(total, scalar_mul(cov_sum, config.coverage_weight));
  }
  loss.total = scalar_mul(total, inv);
  return loss;
}

double clip_grad_norm(ModelParams& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : params.named())
    for (double g : t->grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& [name, t] : params.named())
      for (double& g : t->mutable_grad()) g *= factor;
  }
  return norm;
}

void adam_step(ModelParams& params, AdamState& state, const TrainConfig& config) {
  auto named = params.named();
  if (state.m.size() != named.size()) state = AdamState::for_params(params);
  for (const auto& [name, t] : named)
    for (double g : t->grad())
      if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient in " + name);

  clip_grad_norm(params, config.clip_norm);

  ++state.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < named.size(); ++p) {
    Tensor& t = *named[p].second;
    auto values = t.mutable_values();
    auto grad = t.mutable_grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      values[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
      grad[i] = 0.0;
    }
  }
}

std::optional<topic::TopicVector> fold_in_theta(const topic::TopicModel* topics,
                                                const corpus::EncodedPair& pair,
                                                std::size_t iterations, std::uint64_t seed) {
  if (!topics) return std::nullopt;
  return topic::infer_theta(*topics, topic::to_topic_document(pair.src_ids), iterations, seed);
}

namespace {

EpochRecord evaluate_split(const ModelParams& params, const std::vector<corpus::EncodedPair>& data,
                           const std::vector<std::optional<topic::TopicVector>>& thetas,
                           const TrainConfig& config, std::size_t epoch) {
  NoGradGuard no_grad;
  EpochRecord rec{epoch, "val", 0.0, 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SequenceLoss l = sequence_loss(params, data[i], thetas[i], config);
    rec.mean_nll += l.nll;
    rec.mean_coverage_loss += l.coverage;
  }
  if (!data.empty()) {
    rec.mean_nll /= static_cast<double>(data.size());
    rec.mean_coverage_loss /= static_cast<double>(data.size());
  }
  return rec;
}

}  // namespace

TrainResult train(const std::vector<corpus::EncodedPair>& corpus, const model::ModelDims& dims,
                  const topic::TopicModel* topics, const TrainConfig& config,
                  const std::vector<corpus::EncodedPair>* validation,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty training corpus");
  if (config.mode == Mode::TAG && !topics)
    throw std::invalid_argument("train: TAG mode needs a fitted topic model");
  if (topics && topics->num_topics != dims.num_topics)
    throw std::invalid_argument("train: model dims declare " + std::to_string(dims.num_topics) +
                                " topics, topic model has " + std::to_string(topics->num_topics));

  TrainResult result;
  result.params = ModelParams::init(dims, config.seed);
  if (config.mode == Mode::TAG) model::set_mu_from_beta(result.params, *topics);

  const topic::TopicModel* theta_source = config.mode == Mode::TAG ? topics : nullptr;
  std::vector<std::optional<topic::TopicVector>> thetas;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    thetas.push_back(fold_in_theta(theta_source, corpus[i], config.fold_in_iterations,
                                   config.seed + i));
    if (thetas.back()) result.train_thetas.push_back(*thetas.back());
  }
  std::vector<std::optional<topic::TopicVector>> val_thetas;
  if (validation)
    for (std::size_t i = 0; i < validation->size(); ++i)
      val_thetas.push_back(fold_in_theta(theta_source, (*validation)[i],
                                         config.fold_in_iterations, config.seed + i));

  ModelParams& params = result.params;
  AdamState adam = AdamState::for_params(params);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec{epoch, "train", 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double share = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const SequenceLoss l = sequence_loss(params, corpus[i], thetas[i], config);
        backward(scalar_mul(l.total, share));
        rec.mean_nll += l.nll;
        rec.mean_coverage_loss += l.coverage;
      }
      adam_step(params, adam, config);
    }
    rec.mean_nll /= static_cast<double>(corpus.size());
    rec.mean_coverage_loss /= static_cast<double>(corpus.size());
    result.history.push_back(rec);
    if (on_epoch) on_epoch(params, rec);

    if (validation && !validation->empty()) {
      EpochRecord val = evaluate_split(params, *validation, val_thetas, config, epoch);
      result.history.push_back(val);
      if (on_epoch) on_epoch(params, val);
    }
    if (rec.mean_nll < config.target_nll) break;
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,split,mean_nll,mean_coverage_loss\n";
  for (const auto& r : history)
    out << r.epoch << ',' << r.split << ',' << r.mean_nll << ',' << r.mean_coverage_loss << '\n';
}

}  // namespace tagsum::train
