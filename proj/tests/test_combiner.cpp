#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers/synthetic.hpp"
#include "kgtext/combiner.hpp"
#include "kgtext/corpus.hpp"
#include "kgtext/vector_io.hpp"

using namespace kgtext;

namespace {

ContextualMention make_mention(std::string_view sentence,
                               std::size_t head_index, EntityId entity = 0,
                               std::int64_t mention_id = 0) {
  ContextualMention m;
  m.entity = entity;
  m.sentence = std::make_shared<const TokenizedText>(tokenize(sentence));
  m.head_index = head_index;
  m.span_start = head_index;
  m.span_end = head_index;
  m.mention_id = mention_id;
  return m;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("contextual store loads keyed vectors") {
  const auto dir = synth::scratch_dir("ctx_load");
  synth::write_file(dir / "ctx.tsv",
                    "#dim 4\n"
                    "e1#0\t1\t2\t3\t4\n"
                    "e2#1\t5\t6\t7\t8\n"
                    "e3#2\t9\t10\t11\t12\n");
  const ContextualStore store = load_contextual(dir / "ctx.tsv");
  CHECK(store.dim == 4);
  CHECK(store.keys.size() == 3);
  REQUIRE(store.find("e2#1").has_value());
  CHECK(store.row(*store.find("e2#1"))[0] == 5.0);
  CHECK_FALSE(store.find("missing#9").has_value());
}

TEST_CASE("duplicate contextual keys fail naming the key") {
  const auto dir = synth::scratch_dir("ctx_dup");
  synth::write_file(dir / "ctx.tsv",
                    "#dim 2\n"
                    "k#0\t1\t2\n"
                    "k#0\t3\t4\n");
  CHECK_THROWS_WITH_AS(load_contextual(dir / "ctx.tsv"),
                       doctest::Contains("k#0"), std::runtime_error);
}

TEST_CASE("inconsistent vector dimensions fail") {
  const auto dir = synth::scratch_dir("ctx_dim");
  synth::write_file(dir / "ctx.tsv",
                    "#dim 3\n"
                    "a#0\t1\t2\t3\n"
                    "b#1\t1\t2\n");
  CHECK_THROWS(load_contextual(dir / "ctx.tsv"));
}

TEST_CASE("mention keys combine entity symbol and mention id") {
  Vocabulary entities;
  entities.add("/m/x");
  const auto mention = make_mention("token here", 0, 0, 42);
  CHECK(mention_key(entities, mention) == "/m/x#42");
}

TEST_CASE("pseudo contextual vectors are deterministic unit vectors") {
  const auto mention = make_mention("the quick brown fox jumps", 2);
  const auto a = pseudo_contextual(mention, 64, 7);
  const auto b = pseudo_contextual(mention, 64, 7);
  CHECK(a == b);
  CHECK(l2_norm(a) == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(a.size() == 64);
  // Different seed -> different vector.
  CHECK(pseudo_contextual(mention, 64, 8) != a);
  // Window is ±5 around the head: a token 6 positions away cannot matter.
  const auto near = make_mention("a b c d e f g h i j k l m", 6);
  auto far_text = std::string("Z b c d e f g h i j k l m");
  const auto far = make_mention(far_text, 6);
  CHECK(pseudo_contextual(near, 64, 7) == pseudo_contextual(far, 64, 7));
  // A token inside the window (distance 5) does matter.
  const auto inside = make_mention("a b c d e f g h i j k Z m", 6);
  CHECK(pseudo_contextual(near, 64, 7) != pseudo_contextual(inside, 64, 7));
}

TEST_CASE("same head token in different sentences hashes differently") {
  // Frozen fixture pair for the context-sensitivity claim.
  const auto a = make_mention("banks of the river bend", 0);
  const auto b = make_mention("banks lend money fast", 0);
  CHECK(pseudo_contextual(a, 128, 3) != pseudo_contextual(b, 128, 3));
}

TEST_CASE("pseudo store covers every mention with unique keys") {
  Vocabulary entities;
  entities.add("/m/a");
  entities.add("/m/b");
  std::vector<ContextualMention> mentions = {
      make_mention("first sentence here", 0, 0, 0),
      make_mention("second sentence there", 1, 1, 1),
  };
  const ContextualStore store = build_pseudo_store(mentions, entities, 32, 9);
  CHECK(store.dim == 32);
  CHECK(store.keys.size() == 2);
  CHECK(store.find("/m/a#0").has_value());
  CHECK(store.find("/m/b#1").has_value());
  const auto direct = pseudo_contextual(mentions[0], 32, 9);
  const auto row = store.row(*store.find("/m/a#0"));
  CHECK(std::equal(row.begin(), row.end(), direct.begin()));
}

TEST_CASE("feature modes compose element-exactly") {
  const auto dir = synth::scratch_dir("features");
  Vocabulary entities;
  entities.add("/m/x");
  synth::write_file(dir / "ctx.tsv", "#dim 2\n/m/x#0\t1\t2\n");
  const ContextualStore ctx = load_contextual(dir / "ctx.tsv");
  EmbeddingTable kg;
  kg.family = ModelFamily::distmult;
  kg.dim = 3;
  kg.n_entities = 1;
  kg.n_relations = 0;
  kg.entity_data = {3.0, 4.0, 5.0};
  const auto mention = make_mention("x marks the spot", 0, 0, 0);

  const auto ctx_only =
      features(FeatureMode::contextual, mention, entities, nullptr, &ctx);
  CHECK(ctx_only == std::vector<double>{1.0, 2.0});
  const auto kg_only =
      features(FeatureMode::kg, mention, entities, &kg, nullptr);
  CHECK(kg_only == std::vector<double>{3.0, 4.0, 5.0});
  const auto both =
      features(FeatureMode::concat, mention, entities, &kg, &ctx);
  CHECK(both == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0});
  // Slice identity, element-exact.
  CHECK(std::equal(both.begin(), both.begin() + 2, ctx_only.begin()));
  CHECK(std::equal(both.begin() + 2, both.end(), kg_only.begin()));
}

TEST_CASE("kg mode ignores the contextual store entirely") {
  Vocabulary entities;
  entities.add("/m/x");
  EmbeddingTable kg;
  kg.family = ModelFamily::distmult;
  kg.dim = 2;
  kg.n_entities = 1;
  kg.n_relations = 0;
  kg.entity_data = {7.0, 8.0};
  // No contextual store at all; mention key would be missing from any store.
  const auto mention = make_mention("anything", 0, 0, 999);
  const auto v = features(FeatureMode::kg, mention, entities, &kg, nullptr);
  CHECK(v == std::vector<double>{7.0, 8.0});
}

TEST_CASE("missing contextual keys fail naming the key") {
  const auto dir = synth::scratch_dir("features_missing");
  Vocabulary entities;
  entities.add("/m/x");
  synth::write_file(dir / "ctx.tsv", "#dim 2\nother#5\t1\t2\n");
  const ContextualStore ctx = load_contextual(dir / "ctx.tsv");
  const auto mention = make_mention("x marks", 0, 0, 3);
  CHECK_THROWS_WITH_AS(
      features(FeatureMode::contextual, mention, entities, nullptr, &ctx),
      doctest::Contains("/m/x#3"), std::runtime_error);
}

TEST_CASE("derived dimensions follow the mode") {
  CHECK(feature_dim(FeatureMode::contextual, 512, 400) == 512);
  CHECK(feature_dim(FeatureMode::kg, 512, 400) == 400);
  CHECK(feature_dim(FeatureMode::concat, 512, 400) == 912);
}

TEST_CASE("optional per-part normalization rescales each slice") {
  const auto dir = synth::scratch_dir("features_norm");
  Vocabulary entities;
  entities.add("/m/x");
  synth::write_file(dir / "ctx.tsv", "#dim 2\n/m/x#0\t3\t4\n");
  const ContextualStore ctx = load_contextual(dir / "ctx.tsv");
  EmbeddingTable kg;
  kg.family = ModelFamily::distmult;
  kg.dim = 2;
  kg.n_entities = 1;
  kg.n_relations = 0;
  kg.entity_data = {0.0, 2.0};
  const auto mention = make_mention("x", 0, 0, 0);
  const auto v =
      features(FeatureMode::concat, mention, entities, &kg, &ctx, true);
  REQUIRE(v.size() == 4);
  CHECK(v[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(v[2] == 0.0);
  CHECK(v[3] == doctest::Approx(1.0).epsilon(1e-12));
  // Default: no rescaling.
  const auto raw =
      features(FeatureMode::concat, mention, entities, &kg, &ctx);
  CHECK(raw == std::vector<double>{3.0, 4.0, 0.0, 2.0});
}

TEST_CASE("feature mode names parse and print") {
  CHECK(parse_feature_mode("contextual") == FeatureMode::contextual);
  CHECK(parse_feature_mode("kg") == FeatureMode::kg);
  CHECK(parse_feature_mode("concat") == FeatureMode::concat);
  CHECK(to_string(FeatureMode::concat) == "concat");
  CHECK_THROWS_AS(parse_feature_mode("fusion"), std::invalid_argument);
}
