// tagsum: fit-lda, train, summarize, evaluate, acceptance.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tagsum/checkpoint.hpp"
#include "tagsum/corpus.hpp"
#include "tagsum/decoding.hpp"
#include "tagsum/experiment.hpp"
#include "tagsum/metrics.hpp"
#include "tagsum/model.hpp"
#include "tagsum/topic_model.hpp"
#include "tagsum/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tagsum;

namespace {

constexpr int kManifestFormatVersion = 1;

// Raised for problems with the invocation itself; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_manifest(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                    const json& config, const std::vector<std::string>& artifacts) {
  json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  j["format_versions"] = {{"manifest", kManifestFormatVersion},
                          {"topic_model", topic::kFormatVersion},
                          {"checkpoint", model::kCheckpointFormatVersion}};
  j["artifacts"] = artifacts;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

// Companion files are stored relative to the manifest that names them.
fs::path sibling(const fs::path& manifest, const std::string& name) {
  return manifest.parent_path() / name;
}

corpus::Vocabulary vocab_for_topics(const fs::path& topic_manifest, const topic::TopicModel& tm) {
  if (tm.vocab_file.empty())
    throw std::runtime_error("topic model " + topic_manifest.string() + " names no vocabulary file");
  return corpus::Vocabulary::load(sibling(topic_manifest, tm.vocab_file));
}

// (id, text) for one string field of each JSONL record; ids default to line numbers.
std::vector<std::pair<std::string, std::string>> read_field(const fs::path& path,
                                                            const std::string& field) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
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
    if (!obj.is_object() || !obj.contains(field) || !obj[field].is_string())
      throw std::runtime_error(where + "missing string field \"" + field + "\"");
    std::string id = std::to_string(line_no);
    if (obj.contains("id") && obj["id"].is_string()) id = obj["id"].get<std::string>();
    else if (obj.contains("id") && obj["id"].is_number_integer())
      id = std::to_string(obj["id"].get<long long>());
    out.emplace_back(id, obj[field].get<std::string>());
  }
  return out;
}

// ---- fit-lda ------------------------------------------------------------------

struct FitLdaArgs {
  fs::path train, out;
  std::size_t k = 100;
  double alpha = -1.0;
  double eta = 0.01;
  std::size_t iters = 200;
  std::uint64_t seed = 1;
  std::size_t vocab_size = 50000;
  std::size_t min_freq = 1;
};

int run_fit_lda(const FitLdaArgs& a) {
  const auto pairs = corpus::load_jsonl(a.train);
  if (pairs.empty()) throw std::runtime_error(a.train.string() + " holds no documents");
  fs::create_directories(a.out);
  const auto vocab = corpus::build_vocab(pairs, a.vocab_size, a.min_freq);

  // Articles of the training split only.
  std::vector<topic::Document> docs;
  for (const auto& p : pairs) docs.push_back(topic::to_topic_document(p.article, vocab));
  topic::LdaOptions opts{a.k, a.alpha, a.eta, a.iters, a.seed};
  auto tm = topic::fit_lda(docs, vocab.size() - corpus::kNumSpecials, opts);
  tm.vocab_file = "vocab.txt";
  vocab.save(a.out / "vocab.txt");
  tm.save(a.out / "topic_model.json");

  for (std::size_t k = 0; k < tm.num_topics; ++k) {
    std::cout << "topic " << k << ":";
    for (const auto& w : topic::top_words(tm, vocab, k, 10)) std::cout << ' ' << w;
    std::cout << '\n';
  }
  json cfg = {{"train", a.train.string()}, {"k", a.k},       {"alpha", tm.alpha},
              {"eta", a.eta},              {"iters", a.iters}, {"vocab_size", a.vocab_size},
              {"min_freq", a.min_freq},    {"documents", docs.size()}};
  write_manifest(a.out, "fit-lda", a.seed, cfg,
                 {"vocab.txt", "topic_model.json", "topic_model.bin"});
  return 0;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  fs::path train, val, topic_model, vocab, out;
  std::string mode = "TAG";
  std::size_t vocab_size = 50000;
  model::ModelDims dims;
  train::TrainConfig cfg;
};

int run_train(TrainArgs a) {
  a.cfg.mode = model::parse_mode(a.mode);
  try {
    a.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.cfg.mode == model::Mode::TAG && a.topic_model.empty())
    throw UsageError("train: TAG mode needs --topic-model (run fit-lda first)");
  if (a.cfg.disable_topic && a.cfg.mode != model::Mode::TAG)
    throw UsageError("train: --disable-topic only applies to TAG mode");

  const auto pairs = corpus::load_jsonl(a.train);
  std::optional<topic::TopicModel> topics;
  corpus::Vocabulary vocab;
  if (!a.topic_model.empty()) {
    topics = topic::TopicModel::load(a.topic_model);
    vocab = a.vocab.empty() ? vocab_for_topics(a.topic_model, *topics)
                            : corpus::Vocabulary::load(a.vocab);
  } else if (!a.vocab.empty()) {
    vocab = corpus::Vocabulary::load(a.vocab);
  } else {
    vocab = corpus::build_vocab(pairs, a.vocab_size);
  }

  std::vector<corpus::EncodedPair> train_enc, val_enc;
  for (const auto& p : pairs)
    train_enc.push_back(corpus::encode_pair(p, vocab, a.cfg.max_src_len, a.cfg.max_tgt_len));
  if (!a.val.empty())
    for (const auto& p : corpus::load_jsonl(a.val))
      val_enc.push_back(corpus::encode_pair(p, vocab, a.cfg.max_src_len, a.cfg.max_tgt_len));

  a.dims.vocab_size = vocab.size();
  a.dims.num_topics = topics ? topics->num_topics : 0;

  fs::create_directories(a.out);
  std::vector<std::string> artifacts{"vocab.txt"};
  vocab.save(a.out / "vocab.txt");
  model::CheckpointInfo info;
  info.mode = a.cfg.mode;
  info.use_coverage = a.cfg.use_coverage;
  info.vocab_file = "vocab.txt";
  if (topics) {
    topics->vocab_file = "vocab.txt";
    topics->save(a.out / "topic_model.json");
    info.topic_model_file = "topic_model.json";
    artifacts.insert(artifacts.end(), {"topic_model.json", "topic_model.bin"});
  }

  const auto result = train::train(
      train_enc, a.dims, topics ? &*topics : nullptr, a.cfg, a.val.empty() ? nullptr : &val_enc,
      [&](const model::ModelParams& params, const train::EpochRecord& r) {
        std::cout << "epoch " << r.epoch << ' ' << r.split << " nll " << r.mean_nll
                  << " coverage " << r.mean_coverage_loss << std::endl;
        if (r.split != "train") return;
        char name[32];
        std::snprintf(name, sizeof name, "ckpt_epoch_%03zu", r.epoch);
        info.epoch = static_cast<int>(r.epoch);
        model::save_checkpoint(a.out / (std::string(name) + ".json"), params, info);
        artifacts.push_back(std::string(name) + ".json");
        artifacts.push_back(std::string(name) + ".bin");
      });
  train::write_loss_csv(a.out / "loss.csv", result.history);
  artifacts.push_back("loss.csv");

  const auto& c = a.cfg;
  json cfg = {{"train", a.train.string()},
              {"val", a.val.string()},
              {"topic_model", a.topic_model.string()},
              {"mode", model::to_string(c.mode)},
              {"coverage", c.use_coverage},
              {"disable_topic", c.disable_topic},
              {"lr", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_epsilon},
              {"clip_norm", c.clip_norm},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"coverage_weight", c.coverage_weight},
              {"max_src_len", c.max_src_len},
              {"max_tgt_len", c.max_tgt_len},
              {"fold_in_iters", c.fold_in_iterations},
              {"vocab_size", a.dims.vocab_size},
              {"emb_dim", a.dims.emb_dim},
              {"hidden_dim", a.dims.hidden_dim},
              {"attn_dim", a.dims.attn_dim},
              {"switch_hidden", a.dims.switch_hidden},
              {"num_topics", a.dims.num_topics}};
  write_manifest(a.out, "train", c.seed, cfg, artifacts);
  return 0;
}

// ---- summarize ----------------------------------------------------------------

struct SummarizeArgs {
  fs::path ckpt, input, out;
  std::size_t beam = 4, max_len = 30, min_len = 2, max_src_len = 100, fold_in_iters = 50;
  bool no_length_norm = false;
  std::uint64_t seed = 1;
};

int run_summarize(const SummarizeArgs& a) {
  if (a.min_len > a.max_len) throw UsageError("summarize: --min-len exceeds --max-len");
  const auto ckpt = model::load_checkpoint(a.ckpt);
  const auto vocab = corpus::Vocabulary::load(sibling(a.ckpt, ckpt.info.vocab_file));
  std::optional<topic::TopicModel> topics;
  if (!ckpt.info.topic_model_file.empty())
    topics = topic::TopicModel::load(sibling(a.ckpt, ckpt.info.topic_model_file));
  if (ckpt.info.mode == model::Mode::TAG && !topics)
    throw std::runtime_error("checkpoint " + a.ckpt.string() + " is TAG but names no topic model");

  decode::DecodeOptions dopt;
  dopt.mode = ckpt.info.mode;
  dopt.use_coverage = ckpt.info.use_coverage;
  dopt.beam_size = a.beam;
  dopt.max_len = a.max_len;
  dopt.min_len = a.min_len;
  dopt.length_norm = !a.no_length_norm;

  std::vector<decode::SummaryRecord> records;
  const auto inputs = read_field(a.input, "article");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    corpus::DocumentPair p{corpus::tokenize(inputs[i].second), {}, inputs[i].first};
    const auto enc = corpus::encode_pair(p, vocab, a.max_src_len, 0);
    const auto theta = train::fold_in_theta(
        dopt.mode == model::Mode::TAG ? &*topics : nullptr, enc, a.fold_in_iters, a.seed + i);
    const auto best = decode::beam_search(ckpt.params, enc, theta, dopt).front();
    records.push_back(
        {enc.id, corpus::detokenize(decode::to_tokens(best.ids, vocab, enc.oov_list)), best.score});
  }
  fs::create_directories(a.out);
  decode::write_summaries_jsonl(a.out / "summaries.jsonl", records);
  std::cout << "wrote " << records.size() << " summaries to " << (a.out / "summaries.jsonl").string()
            << '\n';

  json cfg = {{"ckpt", a.ckpt.string()},       {"input", a.input.string()},
              {"mode", model::to_string(dopt.mode)}, {"coverage", dopt.use_coverage},
              {"beam", a.beam},                {"max_len", a.max_len},
              {"min_len", a.min_len},          {"max_src_len", a.max_src_len},
              {"length_norm", dopt.length_norm}, {"fold_in_iters", a.fold_in_iters}};
  write_manifest(a.out, "summarize", a.seed, cfg, {"summaries.jsonl"});
  return 0;
}

// ---- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::vector<std::string> candidates;
  fs::path references, documents, topic_model, out;
  std::size_t fold_in_iters = 50;
  std::uint64_t seed = 20190101;
};

int run_evaluate(const EvaluateArgs& a) {
  std::vector<std::pair<std::string, fs::path>> cand_paths;
  for (const auto& entry : a.candidates) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == entry.size())
      throw UsageError("evaluate: --candidates expects NAME=PATH, got '" + entry + "'");
    const fs::path path = entry.substr(eq + 1);
    if (!fs::is_regular_file(path)) throw UsageError("evaluate: no such file " + path.string());
    cand_paths.emplace_back(entry.substr(0, eq), path);
  }

  const auto refs = read_field(a.references, "summary");
  const auto docs = read_field(a.documents, "article");
  std::map<std::string, std::string> doc_by_id(docs.begin(), docs.end());

  metrics::EvaluationInput in;
  for (const auto& [id, text] : refs) {
    const auto it = doc_by_id.find(id);
    if (it == doc_by_id.end())
      throw std::runtime_error("evaluate: no document with id '" + id + "' in " +
                               a.documents.string());
    in.ids.push_back(id);
    in.references.push_back(corpus::tokenize(text));
    in.documents.push_back(corpus::tokenize(it->second));
  }
  for (const auto& [name, path] : cand_paths) {
    std::map<std::string, std::string> by_id;
    for (const auto& r : decode::read_summaries_jsonl(path)) by_id[r.id] = r.summary;
    std::vector<corpus::Tokens> outs;
    for (const auto& id : in.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end())
        throw std::runtime_error("evaluate: system '" + name + "' has no summary for id '" + id + "'");
      outs.push_back(corpus::tokenize(it->second));
    }
    in.systems.emplace_back(name, std::move(outs));
  }

  std::optional<topic::TopicModel> topics;
  std::optional<corpus::Vocabulary> vocab;
  if (!a.topic_model.empty()) {
    topics = topic::TopicModel::load(a.topic_model);
    vocab = vocab_for_topics(a.topic_model, *topics);
    in.topics = &*topics;
    in.vocab = &*vocab;
    in.coherence.fold_in_iterations = a.fold_in_iters;
    in.coherence.seed = a.seed;
  }
  const auto ev = metrics::evaluate(in);
  metrics::write_evaluation(a.out, ev);

  for (const auto& s : ev.systems) {
    std::cout << s.name << ": R1 " << s.rouge.mean.rouge1.f1 << " R2 " << s.rouge.mean.rouge2.f1
              << " RL " << s.rouge.mean.rougeL.f1;
    if (s.kl) std::cout << " KL median " << s.kl->median;
    std::cout << " wins " << s.wins << '\n';
  }

  json cands = json::object();
  for (const auto& [name, path] : cand_paths) cands[name] = path.string();
  json cfg = {{"candidates", cands},
              {"references", a.references.string()},
              {"documents", a.documents.string()},
              {"topic_model", a.topic_model.string()},
              {"fold_in_iters", a.fold_in_iters}};
  write_manifest(a.out, "evaluate", a.seed, cfg, {"per_pair.csv", "report.json"});
  return 0;
}

// ---- acceptance ---------------------------------------------------------------

int run_acceptance(std::uint64_t seed, const fs::path& out) {
  experiment::ExperimentOptions opt;
  opt.reseed(seed);
  fs::create_directories(out);
  const auto& c = opt.corpus;
  const auto& t = opt.train;
  json cfg = {{"corpus",
               {{"num_topics", c.num_topics},
                {"vocab_size", c.vocab_size},
                {"num_docs", c.num_docs},
                {"doc_len", c.doc_len},
                {"summary_len", c.summary_len},
                {"doc_topic_alpha", c.doc_topic_alpha}}},
              {"test_docs", opt.test_docs},
              {"lda",
               {{"k", opt.lda.num_topics},
                {"alpha", opt.lda.alpha},
                {"eta", opt.lda.eta},
                {"iters", opt.lda.iterations}}},
              {"model",
               {{"emb_dim", opt.dims.emb_dim},
                {"hidden_dim", opt.dims.hidden_dim},
                {"attn_dim", opt.dims.attn_dim},
                {"switch_hidden", opt.dims.switch_hidden}}},
              {"train",
               {{"coverage", t.use_coverage},
                {"lr", t.learning_rate},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"clip_norm", t.clip_norm},
                {"fold_in_iters", t.fold_in_iterations}}},
              {"decode", {{"beam", opt.beam_size}, {"min_len", opt.min_len}, {"max_len", opt.max_len}}}};

  const auto start = std::chrono::steady_clock::now();
  int status = 0;
  try {
    const auto report = experiment::run_acceptance(opt, out, &std::cout);
    std::cout << (report.passed() ? "acceptance: PASS" : "acceptance: FAIL") << '\n';
  } catch (const experiment::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    status = 1;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "runtime " << secs << " s\n";
  write_manifest(out, "acceptance", seed, cfg,
                 {"train.jsonl", "test.jsonl", "vocab.txt", "topic_model.json", "topic_model.bin",
                  "loss_PG.csv", "loss_TAG.csv", "summaries_PG.jsonl", "summaries_TAG.jsonl",
                  "per_pair.csv", "report.json", "acceptance.json"});
  return status;
}

// Expands "--config FILE" into "--key=value" arguments placed right after the
// subcommand, skipping keys that also appear on the command line, so explicit
// flags win and config values go through the same validators as flags.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  std::optional<std::string> config;
  std::set<std::string> given;
  for (std::size_t i = 2; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::string name = a.substr(2, a.find('=') - 2);
    given.insert(name);
    if (name != "config") continue;
    if (a.find('=') != std::string::npos)
      config = a.substr(a.find('=') + 1);
    else if (i + 1 < args.size())
      config = args[i + 1];
  }
  if (!config || !fs::is_regular_file(*config)) return args;  // CLI11 reports the missing file

  std::vector<std::string> injected;
  for (const CLI::ConfigItem& item : CLI::ConfigBase().from_file(*config)) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string name = item.fullname();
    if (given.count(name)) continue;
    if (item.inputs.empty()) injected.push_back("--" + name);
    for (const auto& value : item.inputs) injected.push_back("--" + name + "=" + value);
  }
  args.insert(args.begin() + 2, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tagsum: topic-augmented pointer-generator summarization"};
  app.require_subcommand(1);
  const auto existing = CLI::ExistingFile;
  fs::path config_file;  // consumed by expand_config before parsing

  FitLdaArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-lda", "Fit LDA on training articles and write the topic model");
  fit_cmd->add_option("--config", config_file, "flat key = value file; command-line flags take precedence")->check(existing);
  fit_cmd->add_option("--train", fit.train, "training JSONL")->required()->check(existing);
  fit_cmd->add_option("--k", fit.k, "number of topics")->check(CLI::Range(std::size_t{1}, std::size_t{100000}))->capture_default_str();
  fit_cmd->add_option("--alpha", fit.alpha, "document-topic prior (<= 0 selects 50/K)")->capture_default_str();
  fit_cmd->add_option("--eta", fit.eta, "topic-word prior")->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--iters", fit.iters, "Gibbs sweeps")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--vocab-size", fit.vocab_size, "vocabulary cap including specials")->check(CLI::Range(std::size_t{5}, std::size_t{100000000}))->capture_default_str();
  fit_cmd->add_option("--min-freq", fit.min_freq)->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--out", fit.out, "output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a PG or TAG summarizer");
  train_cmd->add_option("--config", config_file, "flat key = value file; command-line flags take precedence")->check(existing);
  train_cmd->add_option("--train", tr.train, "training JSONL")->required()->check(existing);
  train_cmd->add_option("--val", tr.val, "validation JSONL")->check(existing);
  train_cmd->add_option("--topic-model", tr.topic_model, "topic_model.json from fit-lda")->check(existing);
  train_cmd->add_option("--vocab", tr.vocab, "vocabulary file (default: the topic model's)")->check(existing);
  train_cmd->add_option("--vocab-size", tr.vocab_size, "cap when building a vocabulary")->check(CLI::Range(std::size_t{5}, std::size_t{100000000}))->capture_default_str();
  train_cmd->add_option("--out", tr.out, "output directory")->required();
  train_cmd->add_option("--mode", tr.mode)->check(CLI::IsMember({"PG", "TAG", "pg", "tag"}))->capture_default_str();
  train_cmd->add_flag("--coverage", tr.cfg.use_coverage, "enable the coverage mechanism");
  train_cmd->add_flag("--disable-topic", tr.cfg.disable_topic, "TAG with the topic channel switched off");
  train_cmd->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--adam-beta1", tr.cfg.adam_beta1)->capture_default_str();
  train_cmd->add_option("--adam-beta2", tr.cfg.adam_beta2)->capture_default_str();
  train_cmd->add_option("--adam-eps", tr.cfg.adam_epsilon)->capture_default_str();
  train_cmd->add_option("--clip-norm", tr.cfg.clip_norm)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--coverage-weight", tr.cfg.coverage_weight)->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed)->capture_default_str();
  train_cmd->add_option("--max-src-len", tr.cfg.max_src_len)->capture_default_str();
  train_cmd->add_option("--max-tgt-len", tr.cfg.max_tgt_len)->capture_default_str();
  train_cmd->add_option("--fold-in-iters", tr.cfg.fold_in_iterations)->capture_default_str();
  train_cmd->add_option("--emb-dim", tr.dims.emb_dim)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--hidden-dim", tr.dims.hidden_dim)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--attn-dim", tr.dims.attn_dim)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--switch-hidden", tr.dims.switch_hidden)->check(CLI::PositiveNumber)->capture_default_str();

  SummarizeArgs sm;
  auto* sum_cmd = app.add_subcommand("summarize", "Beam-decode summaries for a JSONL of articles");
  sum_cmd->add_option("--config", config_file, "flat key = value file; command-line flags take precedence")->check(existing);
  sum_cmd->add_option("--ckpt", sm.ckpt, "checkpoint manifest (ckpt_epoch_NNN.json)")->required()->check(existing);
  sum_cmd->add_option("--input", sm.input, "JSONL with an \"article\" field")->required()->check(existing);
  sum_cmd->add_option("--out", sm.out, "output directory")->required();
  sum_cmd->add_option("--beam", sm.beam)->check(CLI::PositiveNumber)->capture_default_str();
  sum_cmd->add_option("--max-len", sm.max_len)->check(CLI::PositiveNumber)->capture_default_str();
  sum_cmd->add_option("--min-len", sm.min_len)->capture_default_str();
  sum_cmd->add_option("--max-src-len", sm.max_src_len)->capture_default_str();
  sum_cmd->add_option("--fold-in-iters", sm.fold_in_iters)->capture_default_str();
  sum_cmd->add_flag("--no-length-norm", sm.no_length_norm, "rank beams by total log-probability");
  sum_cmd->add_option("--seed", sm.seed)->capture_default_str();

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "ROUGE, topic coherence and Lead-3 report");
  eval_cmd->add_option("--config", config_file, "flat key = value file; command-line flags take precedence")->check(existing);
  eval_cmd->add_option("--candidates", ev.candidates, "NAME=PATH of a summaries JSONL (repeatable)")->required();
  eval_cmd->add_option("--references", ev.references, "JSONL with a \"summary\" field")->required()->check(existing);
  eval_cmd->add_option("--documents", ev.documents, "JSONL with an \"article\" field")->required()->check(existing);
  eval_cmd->add_option("--topic-model", ev.topic_model, "enables the KL coherence columns")->check(existing);
  eval_cmd->add_option("--out", ev.out, "output directory")->required();
  eval_cmd->add_option("--fold-in-iters", ev.fold_in_iters)->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed)->capture_default_str();

  std::uint64_t acc_seed = 7;
  fs::path acc_out;
  auto* acc_cmd = app.add_subcommand("acceptance", "Synthetic PG vs TAG experiment with a pass/fail report");
  acc_cmd->add_option("--seed", acc_seed)->capture_default_str();
  acc_cmd->add_option("--out", acc_out, "output directory")->required();

  try {
    const std::vector<std::string> args = expand_config(argc, argv);
    std::vector<char*> ptrs;
    for (const auto& a : args) ptrs.push_back(const_cast<char*>(a.c_str()));
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit_cmd) return run_fit_lda(fit);
    if (*train_cmd) return run_train(tr);
    if (*sum_cmd) return run_summarize(sm);
    if (*eval_cmd) return run_evaluate(ev);
    if (*acc_cmd) return run_acceptance(acc_seed, acc_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
