#include <gtest/gtest.h>

#include <random>

#include "bpoa/errors.hpp"
#include "bpoa/io.hpp"
#include "oracles.hpp"

namespace bpoa {
namespace {

TEST(Io, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 1000; ++t) {
    const double x = u(rng);
    EXPECT_EQ(io::parse_double(io::format_double(x)), x);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::parse_double(io::json(0.25)), 0.25);
  EXPECT_THROW(io::parse_double(io::json("0.1x")), InvalidInput);
  EXPECT_THROW(io::parse_double(io::json::array()), InvalidInput);
}

TEST(Io, InstanceAndProfileRoundTrip) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 50; ++t) {
    const Instance inst = testing::random_instance(rng, 4, 4, 2);
    const Instance back = io::instance_from_json(io::json::parse(io::dump(io::to_json(inst))));
    EXPECT_EQ(back, inst);
    const StrategyProfile prof = testing::random_profile(rng, inst, 3);
    const StrategyProfile pback = io::profile_from_json(io::json::parse(io::dump(io::to_json(prof))), back);
    for (int i = 0; i < inst.num_agents(); ++i) {
      ASSERT_EQ(pback.scheme(i).size(), prof.scheme(i).size());
      for (std::size_t s = 0; s < prof.scheme(i).size(); ++s) {
        EXPECT_EQ(pback.scheme(i)[s].posterior_mean(), prof.scheme(i)[s].posterior_mean());
        EXPECT_EQ(pback.scheme(i)[s].total_mass(), prof.scheme(i)[s].total_mass());
      }
    }
  }
}

TEST(Io, UnrestrictedDomainSurvives) {
  const Instance inst({Prior({{-0.5, 0.5}, {0.5, 0.5}}, ValueDomain::Unrestricted)}, {UtilityFn()}, 1);
  const io::json j = io::to_json(inst);
  EXPECT_EQ(j.at("value_domain"), "unrestricted");
  EXPECT_EQ(io::instance_from_json(j), inst);
  io::json bad = j;
  bad.erase("value_domain");
  EXPECT_THROW(io::instance_from_json(bad), InvalidInput);
}

TEST(Io, RejectsMalformed) {
  EXPECT_THROW(io::instance_from_json(io::json::parse(R"({"agents": []})")), InvalidInput);
  EXPECT_THROW(io::instance_from_json(io::json::parse(R"({"k": 1, "agents": [{"prior": [["0.5"]]}]})")),
               InvalidInput);
  EXPECT_THROW(io::instance_from_json(io::json::parse(R"({"k": 2, "agents": [{"prior": [["0.5", "1"]]}]})")),
               BadK);
  const Instance inst = bernoulli_instance(2, 0.5);
  EXPECT_THROW(io::profile_from_json(io::json::parse(R"({"agents": [{"signals": [[[0, "0.5"], [1, "0.5"]]]}]})"),
                                     inst),
               InvalidInput);
  EXPECT_THROW(io::profile_from_json(
                   io::json::parse(R"({"agents": [{"signals": [[[2, "1"]]]}, {"signals": [[[0, "0.5"]]]}]})"), inst),
               InvalidInput);
  EXPECT_THROW(io::profile_from_json(
                   io::json::parse(R"({"agents": [{"signals": [[[0, "0.6"], [1, "0.5"]]]},
                                                   {"signals": [[[0, "0.5"], [1, "0.5"]]]}]})"),
                   inst),
               AllocationExceedsPrior);
  EXPECT_THROW(io::read_json_file("/nonexistent/file.json"), InvalidInput);
}

}  // namespace
}  // namespace bpoa
