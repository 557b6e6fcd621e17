#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "tagsum/corpus.hpp"

using namespace tagsum::corpus;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tagsum_unit";
  fs::create_directories(dir);
  return dir / name;
}

DocumentPair pair_of(const std::string& article, const std::string& summary, std::string id = "x") {
  return {tokenize(article), tokenize(summary), std::move(id)};
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("tokenize lowercases and isolates punctuation") {
  CHECK(tokenize("A-B? ok") == Tokens{"a", "-", "b", "?", "ok"});
  CHECK(tokenize("  Hello,   World. ") == Tokens{"hello", ",", "world", "."});
  CHECK(tokenize("it's (fine)") == Tokens{"it", "'", "s", "(", "fine", ")"});
  CHECK(tokenize("").empty());
  CHECK(detokenize({"a", "b", "."}) == "a b .");
}

TEST_CASE("sentence ends") {
  CHECK(is_sentence_end("."));
  CHECK(is_sentence_end("!"));
  CHECK(is_sentence_end("?"));
  CHECK_FALSE(is_sentence_end(","));
}

TEST_CASE("build_vocab ranks by frequency after the specials") {
  const Vocabulary v = build_vocab({pair_of("a a b", "")}, 100);
  CHECK(v.size() == 6);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("zzz") == kUnk);
  CHECK(v.token(kPad) == "<pad>");
  CHECK(v.token(kEos) == "</s>");
}

TEST_CASE("build_vocab ties break lexicographically") {
  const Vocabulary v = build_vocab({pair_of("c b a", "")}, 100);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("c") == 6);
}

TEST_CASE("build_vocab honours min_freq and max_size") {
  const std::vector<DocumentPair> corpus{pair_of("a a b c", "a b")};
  CHECK(build_vocab(corpus, 100, 2).size() == 6);  // a, b
  CHECK(build_vocab(corpus, 100, 3).size() == 5);  // a
  CHECK(build_vocab(corpus, 5).size() == 5);
  CHECK_THROWS_AS(build_vocab(corpus, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_vocab({}, 10), std::invalid_argument);
}

TEST_CASE("encode_pair maps source OOVs to extended ids") {
  const Vocabulary v = Vocabulary::from_tokens({"the", "cat"});  // ids 4, 5
  const EncodedPair e = encode_pair(pair_of("the cat met bob bob", "bob met alice"), v);
  CHECK(e.src_ids == std::vector<int>{4, 5, kUnk, kUnk, kUnk});
  CHECK(e.src_extended_ids == std::vector<int>{4, 5, 6, 7, 7});
  CHECK(e.oov_list == std::vector<std::string>{"met", "bob"});
  CHECK(e.tgt_ids == std::vector<int>{kBos, kUnk, kUnk, kUnk, kEos});
  CHECK(e.tgt_extended_ids == std::vector<int>{kBos, 7, 6, kUnk, kEos});
  CHECK(extended_token(7, v, e.oov_list) == "bob");
  CHECK(extended_token(4, v, e.oov_list) == "the");
  CHECK_THROWS_AS(extended_token(9, v, e.oov_list), std::out_of_range);
}

TEST_CASE("encode_pair truncates before OOV indexing") {
  const Vocabulary v = Vocabulary::from_tokens({"a"});
  const EncodedPair e = encode_pair(pair_of("a a zed", "zed a a a"), v, 2, 2);
  CHECK(e.src_ids.size() == 2);
  CHECK(e.oov_list.empty());
  CHECK(e.tgt_extended_ids == std::vector<int>{kBos, kUnk, 4, kEos});
}

TEST_CASE("vocabulary save and load round trip") {
  const Vocabulary v = Vocabulary::from_tokens({"x", "y", "z"});
  const fs::path p = scratch("vocab.txt");
  v.save(p);
  const Vocabulary w = Vocabulary::load(p);
  REQUIRE(w.size() == v.size());
  for (int i = 0; i < static_cast<int>(v.size()); ++i) CHECK(w.token(i) == v.token(i));
}

TEST_CASE("jsonl round trip and error reporting") {
  const fs::path p = scratch("pairs.jsonl");
  save_jsonl(p, {pair_of("a b .", "a", "d1"), pair_of("c", "c d", "d2")});
  const auto back = load_jsonl(p);
  REQUIRE(back.size() == 2);
  CHECK(back[1].id == "d2");
  CHECK(back[1].summary == Tokens{"c", "d"});

  const fs::path bad = scratch("bad.jsonl");
  {
    std::ofstream out(bad);
    out << R"({"id":"1","article":"a","summary":"b"})" << "\n" << R"({"id":"2","article":"a"})" << "\n";
  }
  try {
    load_jsonl(bad);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
    CHECK(std::string(e.what()).find("summary") != std::string::npos);
  }

  const fs::path empty = scratch("empty.jsonl");
  { std::ofstream out(empty); }
  CHECK(load_jsonl(empty).empty());
  CHECK_THROWS(load_jsonl(scratch("missing_file.jsonl")));
}

TEST_CASE("synthetic generator invariants") {
  SyntheticOptions opt;
  opt.num_topics = 3;
  opt.vocab_size = 30;
  opt.num_docs = 60;
  opt.doc_len = 25;
  opt.summary_len = 5;
  opt.seed = 11;
  const SyntheticCorpus c = generate_synthetic(opt);
  REQUIRE(c.pairs.size() == 60);
  REQUIRE(c.beta.size() == 3);
  for (const auto& row : c.beta) {
    double total = 0;
    for (double b : row) total += b;
    CHECK(total == doctest::Approx(1.0));
  }
  for (std::size_t d = 0; d < c.pairs.size(); ++d) {
    const auto& p = c.pairs[d];
    CHECK(p.article.size() == 25);
    CHECK(p.summary.size() == 5);
    CHECK(std::is_sorted(p.summary.begin(), p.summary.end()));
    CHECK(std::set<std::string>(p.summary.begin(), p.summary.end()).size() == 5);
    // some head word of the dominant topic appears in the summary but not the article
    const auto& theta = c.theta[d];
    const std::size_t k = static_cast<std::size_t>(std::max_element(theta.begin(), theta.end()) - theta.begin());
    bool found = false;
    for (int w : c.topic_words[k]) {
      const std::string& word = c.words[static_cast<std::size_t>(w)];
      const bool in_summary = std::find(p.summary.begin(), p.summary.end(), word) != p.summary.end();
      const bool in_article = std::find(p.article.begin(), p.article.end(), word) != p.article.end();
      found = found || (in_summary && !in_article);
    }
    CHECK(found);
  }
  const SyntheticCorpus again = generate_synthetic(opt);
  CHECK(again.pairs[17].article == c.pairs[17].article);
  CHECK(again.pairs[17].summary == c.pairs[17].summary);
}

TEST_CASE("synthetic generator with one topic") {
  SyntheticOptions opt;
  opt.num_topics = 1;
  opt.num_docs = 5;
  const SyntheticCorpus c = generate_synthetic(opt);
  for (const auto& t : c.theta) CHECK(t == std::vector<double>{1.0});
}

TEST_CASE("synthetic generator rejects bad options") {
  SyntheticOptions opt;
  opt.num_topics = 20;
  opt.vocab_size = 30;
  CHECK_THROWS_AS(generate_synthetic(opt), std::invalid_argument);
  opt = {};
  opt.summary_len = 31;
  CHECK_THROWS_AS(generate_synthetic(opt), std::invalid_argument);
}

}  // TEST_SUITE
