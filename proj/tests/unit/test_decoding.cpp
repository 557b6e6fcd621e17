#include <filesystem>
#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tagsum/decoding.hpp"

using namespace tagsum;
using namespace tagsum::decode;

namespace {

struct Setup {
  corpus::Vocabulary vocab = fixture::word_vocab(18);
  corpus::EncodedPair src;
  model::ModelParams params = model::ModelParams::init(fixture::tiny_dims(18, 2, 6), 21);
  topic::TopicVector theta;

  explicit Setup(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    src = corpus::encode_pair(fixture::random_pair(rng, vocab, 8, 4, 2), vocab);
    theta = fixture::random_theta(rng, 2);
  }
};

DecodeOptions options(Mode mode, std::size_t beam) {
  DecodeOptions o;
  o.mode = mode;
  o.use_coverage = true;
  o.beam_size = beam;
  o.max_len = 6;
  o.min_len = 1;
  return o;
}

}  // namespace

TEST_SUITE("decoding") {

TEST_CASE("beam of one is greedy") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Setup s(seed);
    for (Mode mode : {Mode::PG, Mode::TAG}) {
      const Summary g = greedy_decode(s.params, s.src, s.theta, options(mode, 1));
      const auto b = beam_search(s.params, s.src, s.theta, options(mode, 1));
      REQUIRE(b.size() == 1);
      CHECK(b[0].ids == g.ids);
      CHECK(b[0].log_prob == doctest::Approx(g.log_prob));
    }
  }
}

TEST_CASE("min and max length pin the output length") {
  Setup s(4);
  DecodeOptions o = options(Mode::TAG, 3);
  o.min_len = 3;
  o.max_len = 3;
  for (const auto& h : beam_search(s.params, s.src, s.theta, o)) CHECK(h.ids.size() == 3);
  CHECK(greedy_decode(s.params, s.src, s.theta, o).ids.size() == 3);
}

TEST_CASE("beam results are ranked and no worse than greedy") {
  for (std::uint64_t seed : {5, 6, 7, 8}) {
    Setup s(seed);
    DecodeOptions o = options(Mode::TAG, 4);
    o.length_norm = false;
    const auto beams = beam_search(s.params, s.src, s.theta, o);
    REQUIRE(!beams.empty());
    CHECK(beams.size() <= 4);
    for (std::size_t i = 1; i < beams.size(); ++i) CHECK(beams[i - 1].score >= beams[i].score);
    const Summary g = greedy_decode(s.params, s.src, s.theta, o);
    CHECK(beams[0].score >= g.score - 1e-12);
  }
}

TEST_CASE("decoded ids map back to words including source OOVs") {
  corpus::Vocabulary vocab = corpus::Vocabulary::from_tokens({"a", "b"});
  const auto tokens = to_tokens({4, 6, 5, 7}, vocab, {"zed", "yak"});
  CHECK(tokens == corpus::Tokens{"a", "zed", "b", "yak"});
}

TEST_CASE("hypothesis score") {
  Hypothesis h;
  h.tokens = {4, 5, corpus::kEos};
  h.log_prob = -3.0;
  CHECK(h.score(false) == -3.0);
  CHECK(h.score(true) == doctest::Approx(-1.0));
}

TEST_CASE("summaries jsonl round trip") {
  const auto path = std::filesystem::temp_directory_path() / "tagsum_unit" / "s.jsonl";
  std::filesystem::create_directories(path.parent_path());
  write_summaries_jsonl(path, {{"d1", "a b \"c\"", -1.25}, {"d2", "", 0.0}});
  const auto back = read_summaries_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "d1");
  CHECK(back[0].summary == "a b \"c\"");
  CHECK(back[0].score == -1.25);
  CHECK(back[1].summary.empty());
}

}  // TEST_SUITE
