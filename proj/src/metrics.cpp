#include "tagsum/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace tagsum::metrics {

Prf make_prf(double precision, double recall) {
  Prf s{precision, recall, 0.0};
  if (precision + recall > 0) s.f1 = 2 * precision * recall / (precision + recall);
  return s;
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const Tokens& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

Prf rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  if (cand.empty() || ref.empty()) return {};
  std::size_t overlap = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  const double total_c = static_cast<double>(candidate.size() - n + 1);
  const double total_r = static_cast<double>(reference.size() - n + 1);
  return make_prf(overlap / total_c, overlap / total_r);
}

Prf rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return make_prf(lcs / static_cast<double>(candidate.size()),
                  lcs / static_cast<double>(reference.size()));
}

RougeScores rouge(const Tokens& candidate, const Tokens& reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
          rouge_l(candidate, reference)};
}

Tokens lead3(const Tokens& article) {
  int sentences = 0;
  for (std::size_t i = 0; i < article.size(); ++i) {
    if (corpus::is_sentence_end(article[i]) && ++sentences == 3)
      return Tokens(article.begin(), article.begin() + i + 1);
  }
  return article;
}

double topic_kl(const topic::TopicVector& p, const topic::TopicVector& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("topic_kl: dimension mismatch (" + std::to_string(p.size()) +
                                " vs " + std::to_string(q.size()) + ")");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0) kl += p[k] * std::log(p[k] / q[k]);
  return std::max(0.0, kl);
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

CoherenceReport coherence_eval(const topic::TopicModel& topics, const corpus::Vocabulary& vocab,
                               const std::vector<Tokens>& documents,
                               const std::vector<SummarySet>& summary_sets,
                               const CoherenceOptions& options) {
  if (summary_sets.empty()) throw std::invalid_argument("coherence_eval: no summary sets");
  for (const auto& [name, sums] : summary_sets)
    if (sums.size() != documents.size())
      throw std::invalid_argument("coherence_eval: set '" + name + "' has " +
                                  std::to_string(sums.size()) + " summaries for " +
                                  std::to_string(documents.size()) + " documents");

  // Each (document, role) pair gets its own fold-in stream so that identical
  // texts still see independent sampler noise.
  auto stream_seed = [&](std::size_t doc, std::size_t role) {
    return options.seed + 1000003ull * doc + 7919ull * role;
  };
  std::vector<topic::TopicVector> doc_theta;
  for (std::size_t d = 0; d < documents.size(); ++d)
    doc_theta.push_back(topic::infer_theta(topics, topic::to_topic_document(documents[d], vocab),
                                           options.fold_in_iterations, stream_seed(d, 0)));

  CoherenceReport report;
  for (std::size_t s = 0; s < summary_sets.size(); ++s) {
    const auto& [name, sums] = summary_sets[s];
    std::vector<double> kls;
    for (std::size_t d = 0; d < documents.size(); ++d) {
      const auto theta = topic::infer_theta(topics, topic::to_topic_document(sums[d], vocab),
                                            options.fold_in_iterations, stream_seed(d, s + 1));
      kls.push_back(topic_kl(doc_theta[d], theta));
    }
    report.systems.push_back(name);
    report.stats.push_back(box_stats(kls));
    report.kl.push_back(std::move(kls));
  }
  return report;
}

CorpusRouge corpus_rouge(const std::vector<Tokens>& candidates,
                         const std::vector<Tokens>& references) {
  if (candidates.size() != references.size())
    throw std::invalid_argument("corpus_rouge: " + std::to_string(candidates.size()) +
                                " candidates for " + std::to_string(references.size()) +
                                " references");
  CorpusRouge out;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out.per_pair.push_back(rouge(candidates[i], references[i]));
  if (out.per_pair.empty()) return out;
  const double n = static_cast<double>(out.per_pair.size());
  auto accumulate = [&](Prf RougeScores::*field) {
    Prf m;
    for (const auto& r : out.per_pair) {
      m.precision += (r.*field).precision / n;
      m.recall += (r.*field).recall / n;
      m.f1 += (r.*field).f1 / n;
    }
    return m;
  };
  out.mean.rouge1 = accumulate(&RougeScores::rouge1);
  out.mean.rouge2 = accumulate(&RougeScores::rouge2);
  out.mean.rougeL = accumulate(&RougeScores::rougeL);
  return out;
}

double pair_quality(const RougeScores& s) {
  return (s.rouge1.f1 + s.rouge2.f1 + s.rougeL.f1) / 3.0;
}

std::vector<std::size_t> count_wins(const std::vector<const CorpusRouge*>& systems) {
  std::vector<std::size_t> wins(systems.size(), 0);
  if (systems.empty()) return wins;
  const std::size_t n = systems[0]->per_pair.size();
  for (const auto* s : systems)
    if (s->per_pair.size() != n) throw std::invalid_argument("count_wins: misaligned systems");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < systems.size(); ++a) {
      const double qa = pair_quality(systems[a]->per_pair[i]);
      bool best = true;
      for (std::size_t b = 0; b < systems.size() && best; ++b)
        if (b != a && pair_quality(systems[b]->per_pair[i]) >= qa) best = false;
      if (best) ++wins[a];
    }
  }
  return wins;
}

// ---- evaluation report ----------------------------------------------------

Evaluation evaluate(const EvaluationInput& in) {
  const std::size_t n = in.references.size();
  if (in.documents.size() != n || in.ids.size() != n)
    throw std::invalid_argument("evaluate: documents, references and ids must align");
  std::vector<SummarySet> systems = in.systems;
  if (in.include_lead3) {
    std::vector<Tokens> lead;
    for (const auto& d : in.documents) lead.push_back(lead3(d));
    systems.emplace_back("Lead-3", std::move(lead));
  }
  if (systems.empty()) throw std::invalid_argument("evaluate: no systems to score");

  Evaluation ev;
  ev.ids = in.ids;
  for (const auto& [name, cands] : systems) {
    SystemEvaluation se;
    se.name = name;
    se.rouge = corpus_rouge(cands, in.references);
    ev.systems.push_back(std::move(se));
  }
  std::vector<const CorpusRouge*> tables;
  for (const auto& s : ev.systems) tables.push_back(&s.rouge);
  const auto wins = count_wins(tables);
  for (std::size_t s = 0; s < ev.systems.size(); ++s) ev.systems[s].wins = wins[s];

  if (in.topics) {
    if (!in.vocab) throw std::invalid_argument("evaluate: coherence needs the vocabulary");
    std::vector<SummarySet> sets = systems;
    sets.emplace_back("reference", in.references);
    const CoherenceReport rep = coherence_eval(*in.topics, *in.vocab, in.documents, sets, in.coherence);
    for (std::size_t s = 0; s < ev.systems.size(); ++s) {
      ev.systems[s].kl = rep.stats[s];
      ev.systems[s].kl_values = rep.kl[s];
    }
    SystemEvaluation gt;
    gt.name = "reference";
    gt.kl = rep.stats.back();
    gt.kl_values = rep.kl.back();
    ev.reference_coherence = std::move(gt);
  }
  return ev;
}

void write_evaluation(const std::filesystem::path& out_dir, const Evaluation& ev) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "per_pair.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "per_pair.csv").string());
    csv.precision(17);
    csv << "id,system,rouge1_p,rouge1_r,rouge1_f,rouge2_p,rouge2_r,rouge2_f,rougeL_p,rougeL_r,"
           "rougeL_f,kl\n";
    for (const auto& s : ev.systems) {
      for (std::size_t i = 0; i < ev.ids.size(); ++i) {
        const auto& r = s.rouge.per_pair[i];
        csv << ev.ids[i] << ',' << s.name << ',' << r.rouge1.precision << ',' << r.rouge1.recall
            << ',' << r.rouge1.f1 << ',' << r.rouge2.precision << ',' << r.rouge2.recall << ','
            << r.rouge2.f1 << ',' << r.rougeL.precision << ',' << r.rougeL.recall << ','
            << r.rougeL.f1 << ',';
        if (!s.kl_values.empty()) csv << s.kl_values[i];
        csv << '\n';
      }
    }
  }

  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  auto kl_fields = [](nlohmann::ordered_json& o, const std::optional<BoxStats>& kl) {
    if (!kl) return;
    o["kl_median"] = kl->median;
    o["kl_q1"] = kl->q1;
    o["kl_q3"] = kl->q3;
    o["kl_min"] = kl->min;
    o["kl_max"] = kl->max;
  };
  for (const auto& s : ev.systems) {
    nlohmann::ordered_json o;
    o["rouge1"] = s.rouge.mean.rouge1.f1;
    o["rouge2"] = s.rouge.mean.rouge2.f1;
    o["rougeL"] = s.rouge.mean.rougeL.f1;
    kl_fields(o, s.kl);
    o["wins"] = s.wins;
    j[s.name] = o;
  }
  if (ev.reference_coherence) {
    nlohmann::ordered_json o;
    kl_fields(o, ev.reference_coherence->kl);
    j["reference"] = o;
  }
  std::ofstream out(out_dir / "report.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "report.json").string());
  out << j.dump(2) << '\n';
}

}  // namespace tagsum::metrics
