#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "npqs/errors.hpp"
#include "npqs/expr_parser.hpp"
#include "npqs/harness.hpp"

namespace npqs {
namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.n = 1;
  cfg.params = {ParamSpec{7, 1, 1, 0.5}};
  cfg.corpus = {"z1", "(1 - z1)^-3"};
  cfg.n_samples = 2048;
  cfg.inner_samples = 8;
  cfg.sup_budget = 24;
  cfg.out_dir = "harness_test_out";
  return cfg;
}

TEST(ParamSpec, ParseAndResolve) {
  const ParamSpec a = parse_param_spec("p=7, q=1,s=1,alpha=0.5");
  EXPECT_EQ(a, (ParamSpec{7, 1, 1, 0.5}));
  const ParamSpec b = parse_param_spec("p=2,q=1,s=1");
  EXPECT_FALSE(b.alpha.has_value());
  EXPECT_DOUBLE_EQ(b.resolve(2).alpha(), 0.5);  // q+ns-n-1 = 0
  EXPECT_THROW(parse_param_spec("p=2,q=1"), ParameterError);
  EXPECT_THROW(parse_param_spec("p=2,q=1,s=x"), ParameterError);
  EXPECT_THROW(parse_param_spec("p=2,q=1,s=1,t=3"), ParameterError);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig cfg = small_config();
  cfg.params.push_back(ParamSpec{3, 2, 0.5, std::nullopt});
  cfg.kinds = {FunctionalKind::NNorm, FunctionalKind::JMeanOsc};
  cfg.radial_mode = RadialMode::UniformVolume;
  cfg.seed = 0xfedcba9876543210ULL;
  cfg.r_max = 0.875;
  cfg.record_timings = true;
  cfg.wall_clock_budget_s = 12.5;
  const std::string text = run_config_to_json(cfg);
  EXPECT_EQ(run_config_from_json(text), cfg);
  EXPECT_EQ(run_config_to_json(run_config_from_json(text)), text);
}

TEST(RunConfig, MissingCorpusSelectsDefault) {
  const RunConfig cfg = run_config_from_json(R"({"n": 2})");
  EXPECT_EQ(cfg.corpus, default_corpus(2));
  EXPECT_EQ(run_config_from_json(R"({"n": 2, "corpus": []})").corpus.size(), 0u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(run_config_from_json(R"({"n": 2, "colour": 1})"), ParameterError);
  EXPECT_THROW(run_config_from_json(R"({"sampler": {"seeds": 1}})"), ParameterError);
  EXPECT_THROW(run_config_from_json(R"({"params": [{"p": 2, "q": 0, "s": 1}]})"), ParameterError);
  EXPECT_THROW(run_config_from_json(R"({"n": 1, "corpus": ["z2"]})"), ParseError);
  EXPECT_THROW(run_config_from_json(R"({"n": "two"})"), ParameterError);
  EXPECT_THROW(run_config_from_json("{"), ParameterError);
}

TEST(DefaultCorpus, Contents) {
  for (std::size_t n : {1u, 2u, 3u}) {
    const auto c = default_corpus(n);
    for (const auto& e : c) EXPECT_NO_THROW(parse(e, n)) << e;
    EXPECT_EQ(c.front(), "1");
    EXPECT_EQ(c.back(), "log(1 - z1)");
  }
  EXPECT_EQ(default_corpus(1).size(), 10u);
  EXPECT_EQ(default_corpus(2).size(), 13u);
  EXPECT_EQ(seeded_polynomial(1), seeded_polynomial(1));
  EXPECT_NE(seeded_polynomial(1, 5), seeded_polynomial(1, 6));
}

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(csv_field("z1"), "z1");
  EXPECT_EQ(csv_field("dot(z,[1, 2])"), "\"dot(z,[1, 2])\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("a\nb"), "\"a\nb\"");
}

TEST(Report, EmptyCorpus) {
  RunConfig cfg = small_config();
  cfg.corpus.clear();
  const auto rep = run_equivalence_report(cfg);
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_TRUE(rep.consistent);
  EXPECT_EQ(rep.csv, std::string(kCsvHeader) + "\n");
}

TEST(Report, RowsColumnsAndDeterminism) {
  const RunConfig cfg = small_config();
  const auto a = run_equivalence_report(cfg);
  const auto b = run_equivalence_report(cfg);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.summary_json, b.summary_json);
  EXPECT_EQ(a.rows.size(), cfg.corpus.size() * cfg.kinds.size());

  std::istringstream in(a.csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(std::to_string(cfg.seed)), std::string::npos);
  }
  EXPECT_EQ(rows, a.rows.size());
}

TEST(Report, VerdictsForPolynomialAndKernelPower) {
  const auto rep = run_equivalence_report(small_config());
  for (const auto& row : rep.rows) {
    ASSERT_EQ(row.status, "ok") << row.function;
    EXPECT_EQ(row.result.diverged, row.function != "z1") << row.function << " " << to_string(row.kind);
  }
  EXPECT_TRUE(rep.consistent);
  EXPECT_NE(rep.summary_json.find("\"kernel_dominance\""), std::string::npos);
}

TEST(Report, WallClockCapMarksRowsSkipped) {
  RunConfig cfg = small_config();
  cfg.wall_clock_budget_s = 1e-9;
  const auto rep = run_equivalence_report(cfg);
  ASSERT_EQ(rep.rows.size(), 16u);
  std::size_t skipped = 0;
  for (const auto& row : rep.rows) skipped += row.status.rfind("skipped", 0) == 0;
  EXPECT_GE(skipped, 15u);
}

TEST(Battery, PassesOnCorrectBuild) {
  for (std::size_t n : {1u, 2u, 3u}) {
    BatteryOptions opts;
    opts.n = n;
    opts.samples = 5000;
    const auto rep = run_identity_battery(opts);
    for (const auto& c : rep.checks) {
      EXPECT_TRUE(c.passed()) << "n=" << n << " " << c.name << " " << c.max_violation;
    }
    EXPECT_EQ(rep.find("n1_kernel_collapse") != nullptr, n == 1);
  }
}

TEST(Battery, MutationIsCaught) {
  BatteryOptions opts;
  opts.n = 2;
  opts.samples = 2000;
  opts.mutate_s_sign = true;
  const auto rep = run_identity_battery(opts);
  EXPECT_FALSE(rep.all_passed());
  ASSERT_NE(rep.find("jacobian"), nullptr);
  EXPECT_FALSE(rep.find("jacobian")->passed());
}

TEST(Battery, PrintsCollapseLineForDimensionOne) {
  BatteryOptions opts;
  opts.n = 1;
  opts.samples = 500;
  std::ostringstream os;
  print_battery(os, run_identity_battery(opts));
  EXPECT_NE(os.str().find("projection kernel equals the Euclidean kernel"), std::string::npos);
}

TEST(Battery, PointsCoverTheBoundaryLayer) {
  double max_r = 0.0;
  for (std::uint64_t i = 0; i < 10'000; ++i) {
    const double r = battery_point(3, 1, i, 0).norm();
    ASSERT_LT(r, 1.0);
    max_r = std::max(max_r, r);
  }
  EXPECT_GT(max_r, 0.998);
}

}  // namespace
}  // namespace npqs
