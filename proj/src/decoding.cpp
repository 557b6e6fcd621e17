#include "tagsum/decoding.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tagsum::decode {

namespace {

bool banned(int id, std::size_t generated, const DecodeOptions& opt) {
  if (id == corpus::kPad || id == corpus::kBos) return true;
  return id == corpus::kEos && generated < opt.min_len;
}

struct Candidate {
  double log_prob;
  std::size_t parent;
  int token;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.token != b.token) return a.token < b.token;
  return a.parent < b.parent;
}

Summary finish(const Hypothesis& h, bool length_norm) {
  Summary s;
  s.ids = h.tokens;
  if (!s.ids.empty() && s.ids.back() == corpus::kEos) s.ids.pop_back();
  s.log_prob = h.log_prob;
  s.score = h.score(length_norm);
  return s;
}

}  // namespace

double Hypothesis::score(bool length_norm) const {
  if (!length_norm || tokens.empty()) return log_prob;
  return log_prob / static_cast<double>(tokens.size());
}

Summary greedy_decode(const model::ModelParams& params, const corpus::EncodedPair& src,
                      const std::optional<topic::TopicVector>& theta, const DecodeOptions& opt) {
  ad::NoGradGuard no_grad;
  const model::SourceContext source = model::prepare_source(params, src, theta, opt.mode);
  const model::StepOptions step_opts{opt.mode, opt.use_coverage, opt.disable_topic};
  Hypothesis h;
  h.state = model::initial_state(params, source);
  while (h.tokens.size() < opt.max_len) {
    model::StepOutput out = model::decode_step(params, h.state, source, step_opts);
    const auto probs = out.probs.values();
    int best = -1;
    for (std::size_t id = 0; id < probs.size(); ++id) {
      if (banned(static_cast<int>(id), h.tokens.size(), opt)) continue;
      if (best < 0 || probs[id] > probs[best]) best = static_cast<int>(id);
    }
    h.log_prob += std::log(probs[best]);
    h.tokens.push_back(best);
    h.state = std::move(out.state);
    h.state.prev_token = best;
    if (best == corpus::kEos) break;
  }
  h.finished = true;
  return finish(h, opt.length_norm);
}

std::vector<Summary> beam_search(const model::ModelParams& params, const corpus::EncodedPair& src,
                                 const std::optional<topic::TopicVector>& theta,
                                 const DecodeOptions& opt) {
  if (opt.beam_size < 1) throw std::invalid_argument("beam_search: beam size must be >= 1");
  ad::NoGradGuard no_grad;
  const model::SourceContext source = model::prepare_source(params, src, theta, opt.mode);
  const model::StepOptions step_opts{opt.mode, opt.use_coverage, opt.disable_topic};

  std::vector<Hypothesis> live(1), done;
  live[0].state = model::initial_state(params, source);

  for (std::size_t step = 0; step < opt.max_len && !live.empty() && done.size() < opt.beam_size;
       ++step) {
    std::vector<Candidate> candidates;
    std::vector<model::DecoderState> next_states;
    for (std::size_t p = 0; p < live.size(); ++p) {
      model::StepOutput out = model::decode_step(params, live[p].state, source, step_opts);
      const auto probs = out.probs.values();
      std::vector<Candidate> local;
      for (std::size_t id = 0; id < probs.size(); ++id) {
        if (banned(static_cast<int>(id), live[p].tokens.size(), opt) || !(probs[id] > 0)) continue;
        local.push_back({live[p].log_prob + std::log(probs[id]), p, static_cast<int>(id)});
      }
      const std::size_t keep = std::min(local.size(), 2 * opt.beam_size);
      std::partial_sort(local.begin(), local.begin() + keep, local.end(), better);
      candidates.insert(candidates.end(), local.begin(), local.begin() + keep);
      next_states.push_back(std::move(out.state));
    }
    std::sort(candidates.begin(), candidates.end(), better);

    std::vector<Hypothesis> next;
    for (const Candidate& c : candidates) {
      Hypothesis h;
      h.tokens = live[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      if (c.token == corpus::kEos) {
        h.finished = true;
        done.push_back(std::move(h));
      } else {
        h.state = next_states[c.parent];
        h.state.prev_token = c.token;
        next.push_back(std::move(h));
      }
      if (next.size() == opt.beam_size || done.size() >= opt.beam_size) break;
    }
    live = std::move(next);
  }

  // Hypotheses still alive reached the length limit and count as finished.
  for (auto& h : live) {
    if (done.size() >= opt.beam_size) break;
    h.finished = true;
    done.push_back(std::move(h));
  }

  std::vector<Summary> ranked;
  for (const auto& h : done) ranked.push_back(finish(h, opt.length_norm));
  std::stable_sort(ranked.begin(), ranked.end(), [](const Summary& a, const Summary& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ids < b.ids;
  });
  if (ranked.size() > opt.beam_size) ranked.resize(opt.beam_size);
  return ranked;
}

corpus::Tokens to_tokens(const std::vector<int>& ids, const corpus::Vocabulary& vocab,
                         const std::vector<std::string>& oov_list) {
  corpus::Tokens out;
  for (int id : ids) out.push_back(corpus::extended_token(id, vocab, oov_list));
  return out;
}

void write_summaries_jsonl(const std::filesystem::path& path,
                           const std::vector<SummaryRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["summary"] = r.summary;
    j["score"] = r.score;
    out << j.dump() << '\n';
  }
}

std::vector<SummaryRecord> read_summaries_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read summaries " + path.string());
  std::vector<SummaryRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("summary").get<std::string>(),
                     j.value("score", 0.0)});
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tagsum::decode
