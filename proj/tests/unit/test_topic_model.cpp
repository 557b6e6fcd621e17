#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagsum/topic_model.hpp"

using namespace tagsum;
using namespace tagsum::topic;
namespace fs = std::filesystem;

namespace {

std::vector<Document> random_docs(std::uint64_t seed, std::size_t n, std::size_t len, std::size_t V) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> w(0, static_cast<int>(V) - 1);
  std::vector<Document> docs(n);
  for (auto& d : docs)
    for (std::size_t i = 0; i < len; ++i) d.push_back(w(rng));
  return docs;
}

// Two disjoint word blocks, one per planted topic.
TopicModel planted_two_topics() {
  TopicModel m;
  m.num_topics = 2;
  m.vocab_size = 6;
  m.alpha = 0.1;
  m.eta = 0.01;
  m.beta = {0.3, 0.3, 0.3, 0.1 / 3, 0.1 / 3, 0.1 / 3,
            0.1 / 3, 0.1 / 3, 0.1 / 3, 0.3, 0.3, 0.3};
  return m;
}

}  // namespace

TEST_SUITE("topic_model") {

TEST_CASE("Gibbs counts stay consistent with assignments") {
  const auto docs = random_docs(1, 12, 20, 15);
  LdaOptions opt;
  opt.num_topics = 3;
  opt.alpha = 0.5;
  opt.seed = 4;
  GibbsSampler s(docs, 15, opt);
  CHECK(s.state().consistent(docs, 3, 15));
  for (int i = 0; i < 5; ++i) {
    s.sweep();
    CHECK(s.state().consistent(docs, 3, 15));
  }
  const TopicModel m = s.model();
  for (std::size_t k = 0; k < 3; ++k) {
    double total = 0;
    for (std::size_t w = 0; w < 15; ++w) total += m.beta_at(k, w);
    CHECK(total == doctest::Approx(1.0));
  }
}

TEST_CASE("one topic gives the smoothed unigram distribution") {
  const auto docs = random_docs(2, 8, 30, 10);
  LdaOptions opt;
  opt.num_topics = 1;
  opt.eta = 0.05;
  opt.iterations = 3;
  const TopicModel m = fit_lda(docs, 10, opt);
  const auto expected = oracle::single_topic_beta(docs, 10, 0.05);
  for (std::size_t w = 0; w < 10; ++w) CHECK(std::abs(m.beta_at(0, w) - expected[w]) < 1e-12);
}

TEST_CASE("alpha default is 50 / K") {
  LdaOptions opt;
  opt.num_topics = 5;
  opt.iterations = 1;
  const TopicModel m = fit_lda(random_docs(3, 4, 5, 6), 6, opt);
  CHECK(m.alpha == doctest::Approx(10.0));
}

TEST_CASE("same seed reproduces beta exactly") {
  const auto docs = random_docs(5, 10, 15, 12);
  LdaOptions opt;
  opt.num_topics = 3;
  opt.iterations = 20;
  opt.seed = 9;
  CHECK(fit_lda(docs, 12, opt).beta == fit_lda(docs, 12, opt).beta);
}

TEST_CASE("fold-in on an empty document is uniform") {
  const TopicVector t = infer_theta(planted_two_topics(), {}, 20, 1);
  CHECK(t[0] == doctest::Approx(0.5));
  CHECK(t[1] == doctest::Approx(0.5));
}

TEST_CASE("fold-in concentrates on the planted topic") {
  const TopicVector t = infer_theta(planted_two_topics(), {0, 1, 2, 0, 1, 2, 0, 1}, 50, 3);
  CHECK(t[0] > 0.8);
  CHECK(t[0] + t[1] == doctest::Approx(1.0));
  const TopicVector u = infer_theta(planted_two_topics(), {3, 4, 5, 5, 4, 3, 4, 5}, 50, 3);
  CHECK(u[1] > 0.8);
}

TEST_CASE("log likelihood is non-positive and matches a single-token document") {
  const TopicModel m = planted_two_topics();
  const double ll = log_likelihood(m, {{0, 3}, {1}}, 20, 1);
  CHECK(ll <= 0.0);
  // A single token: theta* is the (alpha-smoothed) posterior from the fold-in.
  const TopicVector t = infer_theta(m, {4}, 30, 7);
  const double expected = std::log(t[0] * m.beta_at(0, 4) + t[1] * m.beta_at(1, 4));
  CHECK(log_likelihood(m, {{4}}, 30, 7) == doctest::Approx(expected));

  const auto docs = random_docs(6, 5, 10, 8);
  LdaOptions opt;
  opt.num_topics = 2;
  opt.iterations = 5;
  std::vector<double> trace;
  fit_lda(docs, 8, opt, &trace);
  CHECK(trace.size() == 5);
  for (double v : trace) CHECK(v <= 0.0);
}

TEST_CASE("save and load round trip") {
  TopicModel m = planted_two_topics();
  m.vocab_file = "vocab.txt";
  const fs::path dir = fs::temp_directory_path() / "tagsum_unit";
  fs::create_directories(dir);
  m.save(dir / "tm.json");
  const TopicModel back = TopicModel::load(dir / "tm.json");
  CHECK(back.num_topics == 2);
  CHECK(back.vocab_size == 6);
  CHECK(back.alpha == m.alpha);
  CHECK(back.beta == m.beta);
  CHECK(back.vocab_file == "vocab.txt");

  std::string text;
  {
    std::ifstream in(dir / "tm.json");
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto pos = text.find("\"format_version\"");
  REQUIRE(pos != std::string::npos);
  const auto digit = text.find('1', pos + 16);
  text[digit] = '9';
  {
    std::ofstream out(dir / "tm.json");
    out << text;
  }
  CHECK_THROWS_AS(TopicModel::load(dir / "tm.json"), std::runtime_error);
}

TEST_CASE("top_words") {
  const corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens({"a", "b"});
  TopicModel m;
  m.num_topics = 1;
  m.vocab_size = 2;
  m.beta = {0.75, 0.25};
  CHECK(top_words(m, vocab, 0, 1) == std::vector<std::string>{"a"});
  CHECK(top_words(m, vocab, 0, 10) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(top_words(m, vocab, 1, 1), std::out_of_range);
  CHECK_THROWS_AS(top_words(m, corpus::Vocabulary::from_tokens({"a"}), 0, 1), std::invalid_argument);
}

TEST_CASE("topic documents drop special ids") {
  const Document d = to_topic_document(std::vector<int>{corpus::kUnk, 4, 7, corpus::kPad, 5});
  CHECK(d == Document{0, 3, 1});
}

TEST_CASE("invalid options throw") {
  LdaOptions opt;
  opt.num_topics = 0;
  CHECK_THROWS(fit_lda(random_docs(1, 2, 3, 4), 4, opt));
  opt.num_topics = 2;
  CHECK_THROWS(fit_lda({{0, 9}}, 4, opt));
}

}  // TEST_SUITE
