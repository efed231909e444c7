#include "dh2/bench.hpp"
#include "dh2/controller_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

using namespace dh2;

namespace {

void expect_parse_error(const Json& j) {
  try {
    model_from_json(j);
    FAIL() << "accepted: " << j.dump();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::ParseError || e.code() == ErrorCode::DimensionMismatch)
        << error_name(e.code());
  }
}

bool same_model(const NetworkModel& a, const NetworkModel& b) {
  if (!(a.topology == b.topology) || a.nodes.size() != b.nodes.size()) return false;
  for (size_t i = 0; i < a.nodes.size(); ++i) {
    const auto &x = a.nodes[i], &y = b.nodes[i];
    for (auto m : {&SubsystemRealization::ATT, &SubsystemRealization::ATS,
                   &SubsystemRealization::AST, &SubsystemRealization::ASS,
                   &SubsystemRealization::BTd, &SubsystemRealization::BSd,
                   &SubsystemRealization::BTu, &SubsystemRealization::BSu,
                   &SubsystemRealization::CzT, &SubsystemRealization::CzS,
                   &SubsystemRealization::Dzd, &SubsystemRealization::Dzu,
                   &SubsystemRealization::CyT, &SubsystemRealization::CyS,
                   &SubsystemRealization::Dyd, &SubsystemRealization::Dyu}) {
      if ((x.*m).rows() != (y.*m).rows() || (x.*m).cols() != (y.*m).cols()) return false;
      if ((x.*m).size() && x.*m != y.*m) return false;
    }
  }
  return true;
}

}  // namespace

TEST(ModelIo, OscillatorRoundTrip) {
  const auto t = cycle_topology(5);
  const auto model = gen_oscillator(t, random_oscillator_params(t, 7));
  const Json j = model_to_json(model);
  const auto back = model_from_json(Json::parse(j.dump()));
  EXPECT_TRUE(same_model(model, back));
}

TEST(ModelIo, FileRoundTrip) {
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto path = std::filesystem::temp_directory_path() / "dh2_model_io_test.json";
  write_json_file(path.string(), model_to_json(model));
  EXPECT_TRUE(same_model(model, model_from_json(read_json_file(path.string()))));
  std::filesystem::remove(path);
}

TEST(ModelIo, MissingFileIsParseError) {
  try {
    read_json_file("/nonexistent/dir/model.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(ModelIo, MalformedInputsRejected) {
  const Json good = model_to_json(gen_oscillator(cycle_topology(2), random_oscillator_params(cycle_topology(2), 1)));
  expect_parse_error(Json::array());
  expect_parse_error(Json{{"edges", Json::array()}});

  Json bad_rows = good;
  bad_rows["nodes"][0]["ATT"] = Json::array({Json::array({1.0, 0.1})});
  expect_parse_error(bad_rows);

  Json non_numeric = good;
  non_numeric["nodes"][1]["BTd"][0][0] = "x";
  expect_parse_error(non_numeric);

  Json bad_edge = good;
  bad_edge["edges"][0]["j"] = 9;
  expect_parse_error(bad_edge);

  Json self_loop = good;
  self_loop["edges"][0]["j"] = self_loop["edges"][0]["i"];
  expect_parse_error(self_loop);

  Json wrong_width = good;
  wrong_width["edges"][0]["n_ij"] = 2;
  expect_parse_error(wrong_width);
}

TEST(ControllerIo, DistributedRoundTripIsBitExact) {
  ControllerRealization c;
  c.ctrl_topology = Topology(3);
  c.ctrl_topology.set_width(0, 1, 3);
  c.ctrl_topology.set_width(1, 2, 3);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 3; ++i) {
    ThetaShape s{2, c.ctrl_topology.channel_total(i), 1, 1};
    Mat th(s.rows(), s.cols());
    for (Eigen::Index a = 0; a < th.size(); ++a) th.data()[a] = nd(rng) * 1e3 / 7.0;
    c.theta.push_back(th);
    c.shapes.push_back(s);
  }
  const auto back = controllers_from_json(Json::parse(controllers_to_json(c).dump()));
  EXPECT_TRUE(back.ctrl_topology == c.ctrl_topology);
  ASSERT_EQ(back.theta.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(back.theta[i], c.theta[i]);
    EXPECT_EQ(back.shapes[i].nc, c.shapes[i].nc);
  }
}

TEST(ControllerIo, CentralRoundTrip) {
  CentralController k{Mat::Random(3, 3), Mat::Random(3, 2), Mat::Random(1, 3), Mat::Zero(1, 2)};
  const auto back = central_from_json(Json::parse(central_to_json(k).dump()));
  EXPECT_EQ(back.AK, k.AK);
  EXPECT_EQ(back.BK, k.BK);
  EXPECT_EQ(back.CK, k.CK);
  EXPECT_EQ(back.DK, k.DK);
}

TEST(CertificateIo, RoundTrip) {
  NetworkModel m;
  m.topology = Topology(2);
  m.topology.set_width(0, 1, 1);
  for (int i = 0; i < 2; ++i) m.nodes.push_back(SubsystemRealization::zeros(1, 1, 1, 1, 0, 0));
  AnalysisCertificate c;
  c.gamma = 1.88;
  c.X = {Mat::Constant(1, 1, 1.75), Mat::Constant(1, 1, 1.75)};
  c.rho = {20.0, 20.0};
  c.mult = MultiplierSet::zeros(m.topology);
  c.mult.x11[{0, 1}] = Mat::Constant(1, 1, -0.2);
  c.mult.x11[{1, 0}] = Mat::Constant(1, 1, -0.2);
  const auto back = certificate_from_json(Json::parse(certificate_to_json(c).dump()), m);
  EXPECT_EQ(back.gamma, c.gamma);
  EXPECT_EQ(back.rho, c.rho);
  EXPECT_EQ(back.X[1], c.X[1]);
  EXPECT_EQ(back.mult.get11(1, 0, 1), c.mult.get11(1, 0, 1));
  EXPECT_EQ(back.mult.get12(1, 0, 1), Mat::Zero(1, 1));
}
