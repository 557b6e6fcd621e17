#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagsum/metrics.hpp"

using namespace tagsum;
using namespace tagsum::metrics;

namespace {

Tokens words(const std::string& s) { return corpus::tokenize(s); }

// Blocked topics over six words: topic 0 owns a b c, topic 1 owns d e f.
topic::TopicModel two_blocks() {
  topic::TopicModel m;
  m.num_topics = 2;
  m.vocab_size = 6;
  m.alpha = 0.1;
  m.eta = 0.01;
  m.beta = {0.3, 0.3, 0.3, 0.1 / 3, 0.1 / 3, 0.1 / 3, 0.1 / 3, 0.1 / 3, 0.1 / 3, 0.3, 0.3, 0.3};
  return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("rouge edge cases") {
  CHECK(rouge_n({}, words("a b"), 1).f1 == 0.0);
  CHECK(rouge_n(words("a b"), {}, 1).f1 == 0.0);
  CHECK(rouge_n(words("a"), words("a b"), 2).f1 == 0.0);
  CHECK(rouge_n(words("a b c"), words("a b c"), 2).f1 == 1.0);
  CHECK(rouge_l(words("a b c"), words("c b a")).recall == doctest::Approx(1.0 / 3));
  const Prf p = rouge_n(words("the the the"), words("the cat"), 1);
  CHECK(p.precision == doctest::Approx(1.0 / 3));
  CHECK(p.recall == doctest::Approx(0.5));
  CHECK(make_prf(0, 0).f1 == 0.0);
}

TEST_CASE("rouge agrees with the brute-force oracle") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> len(0, 9), w(0, 4);
  for (int i = 0; i < 300; ++i) {
    Tokens c, r;
    for (int j = len(rng); j > 0; --j) c.push_back(std::string(1, static_cast<char>('a' + w(rng))));
    for (int j = len(rng); j > 0; --j) r.push_back(std::string(1, static_cast<char>('a' + w(rng))));
    for (std::size_t n : {1, 2}) {
      CHECK(rouge_n(c, r, n).f1 == doctest::Approx(oracle::rouge_n(c, r, n).f1));
      CHECK(rouge_n(c, r, n).precision == doctest::Approx(oracle::rouge_n(c, r, n).precision));
    }
    CHECK(rouge_l(c, r).f1 == doctest::Approx(oracle::rouge_l(c, r).f1));
  }
}

TEST_CASE("lead3 keeps the first three sentences") {
  CHECK(lead3(words("a . b ! c ? d .")) == words("a . b ! c ?"));
  CHECK(lead3(words("only one")) == words("only one"));
}

TEST_CASE("box stats interpolate quartiles") {
  const BoxStats s = box_stats({4, 1, 3, 2, 5});
  CHECK(s.median == 3.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.min == 1.0);
  CHECK(s.max == 5.0);
  CHECK(box_stats({1, 2}).median == 1.5);
  CHECK(box_stats({}).median == 0.0);
}

TEST_CASE("topic kl") {
  CHECK(topic_kl({0.5, 0.5}, {0.5, 0.5}) == 0.0);
  CHECK(topic_kl({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK(topic_kl({0.2, 0.8}, {0.6, 0.4}) == doctest::Approx(oracle::kl({0.2, 0.8}, {0.6, 0.4})));
  CHECK_THROWS(topic_kl({1.0}, {0.5, 0.5}));
}

TEST_CASE("coherence separates on-topic and off-topic summaries") {
  const auto tm = two_blocks();
  const corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens({"a", "b", "c", "d", "e", "f"});
  const std::vector<Tokens> docs{words("a b c a b c a b"), words("d e f d e f d e")};
  const std::vector<Tokens> same = docs;
  const std::vector<Tokens> swapped{words("d e f d e"), words("a b c a b")};
  CoherenceOptions opt;
  opt.fold_in_iterations = 50;
  opt.seed = 3;
  const auto rep = coherence_eval(tm, vocab, docs, {{"same", same}, {"swapped", swapped}}, opt);
  REQUIRE(rep.systems == std::vector<std::string>{"same", "swapped"});
  CHECK(rep.stats[0].median < 0.05);
  CHECK(rep.stats[1].median > rep.stats[0].median + 1.0);
}

TEST_CASE("wins count strict per-document bests") {
  const std::vector<Tokens> refs{words("a b c"), words("d e f"), words("g h")};
  const CorpusRouge x = corpus_rouge({words("a b c"), words("d"), words("g h")}, refs);
  const CorpusRouge y = corpus_rouge({words("a b"), words("d e f"), words("g h")}, refs);
  const auto wins = count_wins({&x, &y});
  CHECK(wins == std::vector<std::size_t>{1, 1});  // the tie on the third document counts for nobody
  CHECK(pair_quality(x.per_pair[0]) == doctest::Approx(1.0));
}

TEST_CASE("evaluation adds lead-3 and reference coherence") {
  const auto tm = two_blocks();
  const corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens({"a", "b", "c", "d", "e", "f"});
  EvaluationInput in;
  in.ids = {"1", "2"};
  in.documents = {words("a b . c a . b c . a"), words("d e . f d . e f . d")};
  in.references = {words("a b c"), words("d e f")};
  in.systems = {{"perfect", in.references}};
  in.topics = &tm;
  in.vocab = &vocab;
  const Evaluation ev = evaluate(in);
  REQUIRE(ev.systems.size() == 2);
  CHECK(ev.systems[0].name == "perfect");
  CHECK(ev.systems[1].name == "Lead-3");
  CHECK(ev.systems[0].rouge.mean.rouge1.f1 == doctest::Approx(1.0));
  CHECK(ev.systems[0].rouge.mean.rougeL.f1 == doctest::Approx(1.0));
  CHECK(ev.systems[0].wins == 2);
  REQUIRE(ev.reference_coherence.has_value());
  CHECK(ev.systems[0].kl_values == ev.reference_coherence->kl_values);

  const auto dir = std::filesystem::temp_directory_path() / "tagsum_unit" / "eval";
  write_evaluation(dir, ev);
  CHECK(std::filesystem::exists(dir / "per_pair.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));

  in.ids.pop_back();
  CHECK_THROWS_AS(evaluate(in), std::invalid_argument);
}

}  // TEST_SUITE
