#include <doctest.h>

#include <cmath>
#include <random>

#include "emprobe/error.hpp"
#include "emprobe/probe.hpp"
#include "emprobe/synth.hpp"
#include "helpers.hpp"

using namespace emprobe;

namespace {

using Mapping = std::map<std::string, std::string>;

const std::vector<double> kAlphaGrid{0.001, 0.01, 0.1, 1.0, 10.0, 100.0};

FeatureTable table_of(const Matrix& values, int speakers, const std::string& prefix) {
  FeatureTable t;
  t.representation_id = prefix;
  const int per = static_cast<int>(values.rows()) / speakers;
  for (int i = 0; i < values.rows(); ++i)
    t.rows.push_back({"u" + std::to_string(i), "s" + std::to_string(i / per), "d", i % 2 ? "emo" : "neutral"});
  for (int j = 0; j < values.cols(); ++j) t.feature_names.push_back(prefix + "." + std::to_string(j));
  t.values = values;
  return t;
}

std::vector<std::string> ids_of(const FeatureTable& t) {
  std::vector<std::string> ids;
  for (const auto& r : t.rows) ids.push_back(r.utterance_id);
  return ids;
}

std::vector<std::string> groups_of(const FeatureTable& t) {
  std::vector<std::string> g;
  for (const auto& r : t.rows) g.push_back(r.speaker_id);
  return g;
}

ProbeResult result(const std::string& name, double ii) {
  ProbeResult r;
  r.feature_name = name;
  r.info_increase = ii;
  return r;
}

}  // namespace

TEST_CASE("information_increase worked examples") {
  CHECK(information_increase(2.0, 0.5) == 8.0);
  CHECK(information_increase(1.0, 1.0) == 1.0);
  CHECK(information_increase(0.5, 1.0) == 0.5);
  CHECK(information_increase(0.0, 0.0) == doctest::Approx(1e9));
  CHECK(information_increase_floored(0.0, 1.0));
  CHECK_FALSE(information_increase_floored(1.0, 1.0));
  CHECK_THROWS_AS(information_increase(-1.0, 1.0), InputError);
  CHECK_THROWS_AS(information_increase(1.0, std::nan("")), InputError);
}

TEST_CASE("information_increase properties") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> log_unif(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = std::pow(10.0, log_unif(gen));
    const double t = std::pow(10.0, log_unif(gen));
    const double t2 = t * std::pow(10.0, std::abs(log_unif(gen)) + 1e-3);
    CHECK(information_increase(a, t2) < information_increase(a, t));
    const double a2 = a * (1.0 + std::abs(log_unif(gen)) + 1e-3);
    CHECK(information_increase(a2, t) > information_increase(a, t));
    CHECK(information_increase(a, a) == doctest::Approx(1.0 / a).epsilon(1e-12));
  }
}

TEST_CASE("standardize_targets") {
  Matrix v(4, 3);
  v << 1, 5, 2,
       2, 5, 4,
       3, 5, 6,
       9, 9, 9;
  const auto t = table_of(v, 2, "ac");
  const std::vector<int> rows{0, 1, 2};
  const auto s = standardize_targets(t, rows);
  CHECK(s.names == std::vector<std::string>{"ac.0", "ac.2"});
  CHECK(s.excluded == std::vector<std::string>{"ac.1"});
  const double z = std::sqrt(1.5);
  CHECK(s.values(0, 0) == doctest::Approx(-z));
  CHECK(s.values(1, 0) == doctest::Approx(0.0));
  CHECK(s.values(2, 1) == doctest::Approx(z));
  CHECK_THROWS_AS(standardize_targets(t, std::vector<int>{}), InputError);
}

TEST_CASE("probe_feature") {
  std::mt19937_64 gen(2);
  const Matrix X = testing::random_matrix(gen, 100, 5, 100.0);
  const auto groups = groups_of(table_of(X, 10, "e"));
  SUBCASE("exact linear target") {
    Vector beta(5);
    beta << 1, 0, -1, 2, 0.5;
    CHECK(probe_feature(X, X * beta, groups, kAlphaGrid, {5, 5, 0}) <= 1e-6);
  }
  SUBCASE("independent standardized target") {
    Vector y = testing::random_matrix(gen, 100, 1);
    y = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
    const double r = probe_feature(X, y, groups, kAlphaGrid, {5, 5, 0});
    CHECK(r >= 0.85);
    CHECK(r <= 1.15);
  }
  SUBCASE("near-identity target") {
    std::normal_distribution<double> noise(0.0, 0.01);
    Vector y = X.col(2) / 100.0;
    for (auto& v : y) v += noise(gen);
    CHECK(probe_feature(X, y, groups, kAlphaGrid, {5, 5, 0}) <= 0.05);
  }
}

TEST_CASE("run_probe_suite ranks the informative latent above the decoy") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.embed_dim = 64;
    const auto data = generate(spec);
    const auto ids = ids_of(data.embeddings);
    std::vector<std::string> top;
    for (int p : spec.planted_dims) top.push_back("emb." + std::to_string(p));
    const auto suite = run_probe_suite(data.embeddings, data.acoustic, ids, top, data.categories, {kAlphaGrid, {5, 5, seed}});
    REQUIRE(suite.results.size() == 2);
    const auto& signal = suite.results[0].feature_name == "latent.signal" ? suite.results[0] : suite.results[1];
    const auto& decoy = suite.results[0].feature_name == "latent.signal" ? suite.results[1] : suite.results[0];
    CHECK(signal.plan_digest_all == signal.plan_digest_top);
    CHECK(signal.plan_digest_all == decoy.plan_digest_all);
    wins += signal.info_increase > decoy.info_increase;
  }
  CHECK(wins >= 9);
}

TEST_CASE("run_probe_suite edge cases") {
  std::mt19937_64 gen(3);
  const auto emb = table_of(testing::random_matrix(gen, 60, 6), 6, "emb");
  Matrix ac_values = testing::random_matrix(gen, 60, 3);
  ac_values.col(2).setConstant(4.0);
  const auto ac = table_of(ac_values, 6, "ac");
  const CategoryMap cats(Mapping{{"ac.0", "Energy"}, {"ac.1", "Spectral"}, {"ac.2", "Temporal"}});
  const auto ids = ids_of(emb);

  SUBCASE("top equal to all gives identical RMSEs") {
    const auto suite = run_probe_suite(emb, ac, ids, emb.feature_names, cats, {kAlphaGrid, {3, 3, 1}});
    for (const auto& r : suite.results) {
      CHECK(r.rmse_all == r.rmse_top);
      CHECK(r.alpha_all == r.alpha_top);
    }
  }
  SUBCASE("constant column is excluded") {
    const std::vector<std::string> top{"emb.0"};
    const auto suite = run_probe_suite(emb, ac, ids, top, cats, {kAlphaGrid, {3, 3, 1}});
    CHECK(suite.results.size() == 2);
    CHECK(suite.excluded == std::vector<std::string>{"ac.2"});
    CHECK_FALSE(suite.warnings.empty());
  }
  SUBCASE("unknown utterance id") {
    auto bad = ids;
    bad.push_back("missing");
    const std::vector<std::string> top{"emb.0"};
    CHECK_THROWS_AS(run_probe_suite(emb, ac, bad, top, cats, {}), InputError);
  }
  SUBCASE("unmapped acoustic feature") {
    const CategoryMap partial(Mapping{{"ac.0", "Energy"}});
    const std::vector<std::string> top{"emb.0"};
    CHECK_THROWS_AS(run_probe_suite(emb, ac, ids, top, partial, {kAlphaGrid, {3, 3, 1}}), InputError);
  }
}

TEST_CASE("aggregate_by_category") {
  const CategoryMap cats(Mapping{{"a", "Energy"}, {"b", "Energy"}, {"c", "Spectral"}, {"d", "Energy"}, {"e", "Energy"}});
  const std::vector<ProbeResult> results{result("a", 1.0), result("b", 4.0), result("c", 2.0), result("d", 3.0),
                                         result("e", 10.0)};
  const auto agg = aggregate_by_category(results, cats);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].category == "Energy");
  CHECK(agg[0].count == 4);
  CHECK(agg[0].mean_ii == 4.5);
  CHECK(agg[0].median_ii == 3.5);
  CHECK(agg[1].category == "Spectral");
  CHECK(agg[1].median_ii == 2.0);

  const CategoryMap missing(Mapping{{"a", "Energy"}});
  CHECK_THROWS_AS(aggregate_by_category(results, missing), InputError);
  CHECK_THROWS_AS(aggregate_by_category(std::vector<ProbeResult>{}, cats), InputError);
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), InputError);
}

TEST_CASE("category_shap_profile") {
  const CategoryMap cats(Mapping{{"a", "Energy"}, {"b", "Frequency"}, {"c", "Energy"}});
  Attribution attr;
  attr.feature_names = {"a", "b", "c"};
  attr.importance = Vector(3);
  attr.importance << 1.0, 2.0, 1.0;
  const auto profile = category_shap_profile(attr, cats);
  REQUIRE(profile.size() == 4);
  CHECK(profile[0].category == "Energy");
  CHECK(profile[0].share == 0.5);
  CHECK(profile[1].share == 0.5);
  CHECK(profile[2].share == 0.0);
  CHECK(profile[3].share == 0.0);

  attr.importance.setZero();
  for (const auto& s : category_shap_profile(attr, cats)) CHECK(s.share == 0.0);
}

TEST_CASE("CategoryMap") {
  CHECK_THROWS_AS(CategoryMap(Mapping{{"x", "Loudness"}}), InputError);
  const CategoryMap cats(Mapping{{"x", "Temporal"}});
  CHECK(cats.contains("x"));
  CHECK(cats.category_of("x") == "Temporal");
  CHECK_THROWS_WITH_AS(cats.category_of("y"), doctest::Contains("'y'"), InputError);

  const auto dir = testing::temp_dir("category_map");
  cats.save(dir / "map.csv");
  CHECK(CategoryMap::load(dir / "map.csv").entries() == cats.entries());

  testing::write_text(dir / "bad_header.csv", "name,cat\nx,Energy\n");
  CHECK_THROWS_AS(CategoryMap::load(dir / "bad_header.csv"), InputError);
  testing::write_text(dir / "dup.csv", "feature_name,category\nx,Energy\nx,Spectral\n");
  CHECK_THROWS_AS(CategoryMap::load(dir / "dup.csv"), InputError);
  testing::write_text(dir / "unknown.csv", "feature_name,category\nx,Pitch\n");
  CHECK_THROWS_AS(CategoryMap::load(dir / "unknown.csv"), InputError);
}

TEST_CASE("shipped eGeMAPSv02 category map") {
  const auto cats = CategoryMap::load(std::filesystem::path(EMPROBE_DATA_DIR) / "egemaps_v02_categories.csv");
  CHECK(cats.entries().size() == 88);
  CHECK(cats.category_of("egemaps.loudness_sma3_amean") == "Energy");
  CHECK(cats.category_of("egemaps.F0semitoneFrom27.5Hz_sma3nz_amean") == "Frequency");
  CHECK(cats.category_of("egemaps.mfcc1_sma3_amean") == "Spectral");
  CHECK(cats.category_of("egemaps.VoicedSegmentsPerSec") == "Temporal");
}
