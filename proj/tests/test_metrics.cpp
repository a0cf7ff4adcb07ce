#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers/synthetic.hpp"
#include "kgtext/metrics.hpp"

using namespace kgtext;

namespace {

// Labels A..Z as ids 0..25 for readable fixtures.
std::vector<LabelId> ids(std::initializer_list<char> labels) {
  std::vector<LabelId> out;
  for (const char c : labels) out.push_back(c - 'A');
  return out;
}

EvalRecord record(std::vector<LabelId> ranked, std::vector<LabelId> gold) {
  EvalRecord r;
  r.prediction.labels = std::move(ranked);
  r.prediction.scores.resize(r.prediction.labels.size());
  for (std::size_t i = 0; i < r.prediction.scores.size(); ++i) {
    r.prediction.scores[i] = 1.0 - 0.01 * static_cast<double>(i);
  }
  r.gold = std::move(gold);
  return r;
}

constexpr double kTol = 1e-12;

}  // namespace

TEST_CASE("precision@n worked examples") {
  // gold {A,B,C}, ranked [A,X,B,Y,C], n=5 -> 3/5
  CHECK(precision_at_n(ids({'A', 'X', 'B', 'Y', 'C'}), ids({'A', 'B', 'C'}),
                       5) == doctest::Approx(0.6).epsilon(kTol));
  // perfect top-n
  CHECK(precision_at_n(ids({'A', 'B'}), ids({'A', 'B'}), 2) == 1.0);
  // disjoint top-n
  CHECK(precision_at_n(ids({'X', 'Y'}), ids({'A'}), 2) == 0.0);
  // ranking shorter than n counts the missing slots as misses
  CHECK(precision_at_n(ids({'A'}), ids({'A'}), 4) == 0.25);
  CHECK_THROWS_AS(precision_at_n(ids({'A'}), ids({'A'}), 0),
                  std::invalid_argument);
}

TEST_CASE("ap@k worked examples") {
  // gold {A,B}, ranked [A,X,B], k=3 -> (1/2)(1 + 2/3) = 0.8333...
  CHECK(ap_at_k(ids({'A', 'X', 'B'}), ids({'A', 'B'}), 3) ==
        doctest::Approx(5.0 / 6.0).epsilon(kTol));
  CHECK(ap_at_k(ids({'A', 'B'}), ids({'A'}), 1) == 1.0);
  CHECK(ap_at_k(ids({'X', 'Y', 'Z'}), ids({'A'}), 3) == 0.0);
  // Normalizing by m caps AP@k below 1 when k < m.
  CHECK(ap_at_k(ids({'A', 'B'}), ids({'A', 'B'}), 1) ==
        doctest::Approx(0.5).epsilon(kTol));
  CHECK_THROWS_AS(ap_at_k(ids({'A'}), {}, 1), std::invalid_argument);
}

TEST_CASE("reciprocal rank and MRR worked examples") {
  // first-gold ranks [1,2,4] -> MRR = (1 + 1/2 + 1/4)/3 = 0.5833...
  const std::vector<EvalRecord> records = {
      record(ids({'A', 'B', 'C', 'D'}), ids({'A'})),
      record(ids({'B', 'A', 'C', 'D'}), ids({'A'})),
      record(ids({'B', 'C', 'D', 'A'}), ids({'A'})),
  };
  CHECK(mean_reciprocal_rank(records) ==
        doctest::Approx(7.0 / 12.0).epsilon(kTol));
  CHECK(reciprocal_rank(ids({'X', 'Y'}), ids({'A'})) == 0.0);  // gold absent
  CHECK(reciprocal_rank(ids({'A', 'B'}), ids({'B', 'A'})) == 1.0);
  CHECK_THROWS_AS(mean_reciprocal_rank({}), std::invalid_argument);
}

TEST_CASE("map@1 equals exact top-1 precision on single-label records") {
  const std::vector<EvalRecord> records = {
      record(ids({'A', 'B'}), ids({'A'})),
      record(ids({'B', 'A'}), ids({'A'})),
      record(ids({'C', 'A'}), ids({'C'})),
  };
  CHECK(map_at_k(records, 1) == doctest::Approx(2.0 / 3.0).epsilon(kTol));
}

TEST_CASE("hits@k worked examples") {
  const std::vector<std::size_t> ranks = {1, 5, 11};
  CHECK(hits_at_k(ranks, 10) == doctest::Approx(2.0 / 3.0).epsilon(kTol));
  CHECK(hits_at_k(ranks, 11) == 1.0);
  CHECK_THROWS_AS(hits_at_k({}, 10), std::invalid_argument);
  CHECK(mrr_from_ranks(ranks) ==
        doctest::Approx((1.0 + 0.2 + 1.0 / 11.0) / 3.0).epsilon(kTol));
  CHECK_THROWS_AS(mrr_from_ranks({}), std::invalid_argument);
}

TEST_CASE("metric implementations match the brute-force oracle exactly") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_labels = 2 + static_cast<int>(uniform_below(rng, 19));
    std::vector<LabelId> ranked(n_labels);
    std::iota(ranked.begin(), ranked.end(), 0);
    shuffle_vector(ranked, rng);
    const int n_gold =
        1 + static_cast<int>(uniform_below(
                rng, std::min<std::uint64_t>(5, n_labels)));
    std::vector<LabelId> pool = ranked;
    shuffle_vector(pool, rng);
    // Half the time leave some gold outside the ranking to hit the rr=0 path.
    std::vector<LabelId> gold(pool.begin(), pool.begin() + n_gold);
    if (trial % 2 == 0) gold[0] = static_cast<LabelId>(n_labels + 5);
    const int k = 1 + static_cast<int>(uniform_below(rng, n_labels + 3));

    std::vector<int> oracle_ranked(ranked.begin(), ranked.end());
    std::vector<int> oracle_gold(gold.begin(), gold.end());
    CHECK(std::abs(precision_at_n(ranked, gold, k) -
                   synth::oracle_precision_at_n(oracle_ranked, oracle_gold,
                                                k)) <= kTol);
    CHECK(std::abs(ap_at_k(ranked, gold, k) -
                   synth::oracle_ap_at_k(oracle_ranked, oracle_gold, k)) <=
          kTol);
    CHECK(std::abs(reciprocal_rank(ranked, gold) -
                   synth::oracle_rr(oracle_ranked, oracle_gold)) <= kTol);
  }
}

TEST_CASE("ap@k with unbounded k equals classic average precision") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_labels = 2 + static_cast<int>(uniform_below(rng, 9));
    std::vector<LabelId> ranked(n_labels);
    std::iota(ranked.begin(), ranked.end(), 0);
    shuffle_vector(ranked, rng);
    const int n_gold = 1 + static_cast<int>(uniform_below(rng, n_labels));
    std::vector<LabelId> pool = ranked;
    shuffle_vector(pool, rng);
    const std::vector<LabelId> gold(pool.begin(), pool.begin() + n_gold);
    // Classic AP: mean over gold items of precision at their rank (all gold
    // are retrieved because the ranking is total).
    double classic = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      if (std::find(gold.begin(), gold.end(), ranked[i]) != gold.end()) {
        std::vector<int> r(ranked.begin(), ranked.end());
        std::vector<int> g(gold.begin(), gold.end());
        classic += synth::oracle_precision_at_n(r, g, static_cast<int>(i + 1));
      }
    }
    classic /= static_cast<double>(n_gold);
    CHECK(std::abs(ap_at_k(ranked, gold, 1000) - classic) <= kTol);
  }
}

TEST_CASE("aggregates are invariant under record permutation") {
  std::mt19937_64 rng(31);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 50; ++i) {
    std::vector<LabelId> ranked(8);
    std::iota(ranked.begin(), ranked.end(), 0);
    shuffle_vector(ranked, rng);
    records.push_back(record(ranked, {static_cast<LabelId>(
                                 uniform_below(rng, 8))}));
  }
  const double map_before = map_at_k(records, 3);
  const double mrr_before = mean_reciprocal_rank(records);
  shuffle_vector(records, rng);
  CHECK(map_at_k(records, 3) == doctest::Approx(map_before).epsilon(kTol));
  CHECK(mean_reciprocal_rank(records) ==
        doctest::Approx(mrr_before).epsilon(kTol));
}

TEST_CASE("rr is 1 exactly when the top-ranked label is gold") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabelId> ranked(6);
    std::iota(ranked.begin(), ranked.end(), 0);
    shuffle_vector(ranked, rng);
    const std::vector<LabelId> gold{
        static_cast<LabelId>(uniform_below(rng, 6))};
    const bool top_hit = ranked[0] == gold[0];
    CHECK((reciprocal_rank(ranked, gold) == 1.0) == top_hit);
  }
}

TEST_CASE("precision@n respects the min(m,n)/n bound") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_labels = 3 + static_cast<int>(uniform_below(rng, 10));
    std::vector<LabelId> ranked(n_labels);
    std::iota(ranked.begin(), ranked.end(), 0);
    shuffle_vector(ranked, rng);
    const int m = 1 + static_cast<int>(uniform_below(rng, n_labels));
    const std::vector<LabelId> gold(ranked.begin(), ranked.begin() + m);
    const int n = 1 + static_cast<int>(uniform_below(rng, n_labels));
    const double p = precision_at_n(ranked, gold, n);
    CHECK(p <= static_cast<double>(std::min(m, n)) / n + kTol);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("entity ranking places ties at the mean rank rounded up") {
  // Unique top score ranks 1.
  CHECK(rank_entity(std::vector<double>{3.0, 1.0, 2.0}, 0) == 1);
  // True among ranks 2,3,4 all tied -> mean 3.
  CHECK(rank_entity(std::vector<double>{3.0, 1.0, 1.0, 1.0, 0.0}, 2) == 3);
  // Two-way tie at the top -> mean 1.5 rounds up to 2.
  CHECK(rank_entity(std::vector<double>{2.0, 2.0, 0.0}, 0) == 2);
  // All scores equal over five candidates -> rank 3.
  CHECK(rank_entity(std::vector<double>{1, 1, 1, 1, 1}, 4) == 3);
  // Exclusions drop competitors but never the true index.
  const std::vector<double> scores{5.0, 4.0, 3.0};
  const std::vector<char> exclude{1, 0, 0};
  CHECK(rank_entity(scores, 2, exclude) == 2);
  std::vector<char> exclude_true{0, 0, 1};
  CHECK(rank_entity(scores, 2, exclude_true) == 3);
}

TEST_CASE("entity ranking matches a sort-based oracle with ties") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + uniform_below(rng, 19);
    std::vector<double> scores(n);
    for (double& s : scores) {
      s = static_cast<double>(uniform_below(rng, 6));  // deliberate ties
    }
    const std::size_t true_index = uniform_below(rng, n);
    std::vector<char> exclude(n, 0);
    for (auto& e : exclude) e = uniform_below(rng, 3) == 0 ? 1 : 0;
    exclude[true_index] = 0;
    CHECK(rank_entity(scores, true_index, exclude) ==
          synth::oracle_rank(scores, true_index, exclude));
    CHECK(rank_entity(scores, true_index) ==
          synth::oracle_rank(scores, true_index, {}));
  }
}

TEST_CASE("triple ranking honors raw and filtered protocols") {
  // Entities a,b,c; facts (a,R,b) and (a,R,c); object embeddings make c beat
  // b, so the raw rank of b is 2 and filtering the known fact c lifts it to 1.
  TripleStore store;
  store.entities().add("a");
  store.entities().add("b");
  store.entities().add("c");
  store.relations().add("R");
  store.add_split("train", {{0, 0, 1}, {0, 0, 2}});
  store.finalize();
  EmbeddingTable table;
  table.family = ModelFamily::distmult;
  table.dim = 1;
  table.n_entities = 3;
  table.n_relations = 1;
  table.entity_data = {0.5, 1.0, 2.0};
  table.relation_data = {1.0};
  const Triple t{0, 0, 1};
  CHECK(rank_triple(table, t, RankSide::object, RankProtocol::raw, store) ==
        2);
  CHECK(rank_triple(table, t, RankSide::object, RankProtocol::filtered,
                    store) == 1);
  // Subject side: candidates score s*1*1 = {0.5, 1.0, 2.0}; true subject a
  // ranks 3 raw; no other known subject exists so filtering changes nothing.
  CHECK(rank_triple(table, t, RankSide::subject, RankProtocol::raw, store) ==
        3);
  CHECK(rank_triple(table, t, RankSide::subject, RankProtocol::filtered,
                    store) == 3);
}

TEST_CASE("filtered rank never exceeds raw rank") {
  const TripleStore store = synth::make_random_kg(20, 3, 150, 2024);
  std::mt19937_64 rng(9);
  EmbeddingTable table;
  table.family = ModelFamily::distmult;
  table.dim = 4;
  table.n_entities = store.n_entities();
  table.n_relations = store.n_relations();
  table.entity_data.resize(20 * 4);
  table.relation_data.resize(3 * 4);
  synth::fill_uniform(table.entity_data, rng, -1.0, 1.0);
  synth::fill_uniform(table.relation_data, rng, -1.0, 1.0);
  for (const Triple& t : store.split("test")) {
    for (const RankSide side : {RankSide::subject, RankSide::object}) {
      const auto raw = rank_triple(table, t, side, RankProtocol::raw, store);
      const auto filtered =
          rank_triple(table, t, side, RankProtocol::filtered, store);
      CHECK(filtered <= raw);
      CHECK(raw >= 1);
    }
  }
}

TEST_CASE("summary statistics use the population standard deviation") {
  const std::vector<double> values{0.0, 1.0};
  const MetricStat stat = summarize(values);
  CHECK(stat.mean == doctest::Approx(0.5).epsilon(kTol));
  CHECK(stat.stddev == doctest::Approx(0.5).epsilon(kTol));  // ddof = 0
  const MetricStat single = summarize(std::vector<double>{0.25});
  CHECK(single.mean == 0.25);
  CHECK(single.stddev == 0.0);
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}
