#include "dh2/bench.hpp"
#include "dh2/controller_io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dh2;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dh2_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(DH2CTL_PATH) + " " + args + " > " + out + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }

  std::string write_example_files() const {
    NetworkModel m;
    m.topology = Topology(2);
    m.topology.set_width(0, 1, 1);
    for (int i = 0; i < 2; ++i) {
      auto s = SubsystemRealization::zeros(1, 1, 1, 1, 0, 0);
      s.ATT << 0.5;
      s.ATS << 0.1;
      s.AST << 1.0;
      s.BTd << 1.0;
      s.CzT << 1.0;
      m.nodes.push_back(s);
    }
    AnalysisCertificate c;
    c.gamma = 1.88;
    c.X = {Mat::Constant(1, 1, 1.75), Mat::Constant(1, 1, 1.75)};
    c.rho = {20.0, 20.0};
    c.mult = MultiplierSet::zeros(m.topology);
    c.mult.x11[{0, 1}] = Mat::Constant(1, 1, -0.2);
    c.mult.x11[{1, 0}] = Mat::Constant(1, 1, -0.2);
    write_json_file(path("example.json"), model_to_json(m));
    write_json_file(path("cert.json"), certificate_to_json(c));
    return path("example.json");
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenOscillatorWritesModel) {
  const auto r = run("gen-oscillator --topology triangle --out " + path("tri.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto m = model_from_json(read_json_file(path("tri.json")));
  EXPECT_EQ(m.topology.node_count(), 3);
  const auto c = run("gen-oscillator --topology cycle --L 6 --seed 3 --out " + path("c.json"));
  ASSERT_EQ(c.code, 0) << c.out;
  EXPECT_EQ(model_from_json(read_json_file(path("c.json"))).topology.edges().size(), 6u);
}

TEST_F(Cli, AnalyzeCertificate) {
  const std::string model = write_example_files();
  const auto ok = run("analyze --model " + model + " --cert " + path("cert.json"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  const auto j = Json::parse(ok.out);
  EXPECT_NEAR(j.at("gamma_min").get<double>(), std::sqrt(3.5), 1e-9);

  const auto low = run("analyze --model " + model + " --cert " + path("cert.json") + " --gamma 1.0");
  EXPECT_EQ(low.code, 1) << low.out;
}

TEST_F(Cli, AnalyzeSearchBelowTrueNormFails) {
  const std::string model = write_example_files();
  EXPECT_EQ(run("analyze --model " + model + " --gamma 1.0").code, 1);
  EXPECT_EQ(run("analyze --model " + model + " --gamma 2.0").code, 0);
}

TEST_F(Cli, MalformedInputExitsWithParseCode) {
  {
    std::ofstream bad(path("bad.json"));
    bad << "{\"nodes\": [ {\"dims\": 3} ";
  }
  EXPECT_EQ(run("analyze --model " + path("bad.json") + " --gamma 1").code, 2);
  {
    std::ofstream bad(path("shape.json"));
    bad << R"({"nodes": [{"dims": {"k": 1, "n": 0, "f": 1, "q": 1, "nu": 0, "ny": 0},
              "ATT": [[1, 2]]}], "edges": []})";
  }
  EXPECT_EQ(run("h2norm --model " + path("shape.json")).code, 2);
  EXPECT_EQ(run("analyze --model " + write_example_files() + " --bisect 3").code, 2);
  EXPECT_EQ(run("synth --bogus-flag").code, 2);
}

TEST_F(Cli, HypothesisViolationExitCode) {
  auto m = gen_oscillator(triangle_topology(), triangle_params());
  m.nodes[0].Dyd(0, 0) = 0.5;
  write_json_file(path("dyd.json"), model_to_json(m));
  EXPECT_EQ(run("synth --model " + path("dyd.json") + " --gamma 1").code, 3);
}

TEST_F(Cli, SynthesizeThenEvaluate) {
  ASSERT_EQ(run("gen-oscillator --topology triangle --out " + path("tri.json")).code, 0);
  const auto s = run("synth --model " + path("tri.json") + " --mode distributed --gamma 1 --out " +
                     path("ctrl.json") + " --report " + path("report.json"));
  ASSERT_EQ(s.code, 0) << s.out;
  const auto report = read_json_file(path("report.json"));
  EXPECT_TRUE(report.at("verified").get<bool>());

  const auto h = run("h2norm --model " + path("tri.json") + " --controllers " + path("ctrl.json"));
  ASSERT_EQ(h.code, 0) << h.out;
  const auto ctrl = controllers_from_json(read_json_file(path("ctrl.json")));
  const auto model = model_from_json(read_json_file(path("tri.json")));
  const double oracle = h2_norm_lyapunov(assemble_interconnected(close_network(model, ctrl).network));
  EXPECT_NEAR(Json::parse(h.out).at("h2").get<double>(), oracle, 1e-9 * (1.0 + oracle));
  EXPECT_LT(oracle, 1.0);

  const auto sim = run("simulate --model " + path("tri.json") + " --controllers " +
                       path("ctrl.json") + " --noise zero --horizon 20 --out " + path("ts.csv"));
  ASSERT_EQ(sim.code, 0) << sim.out;
  std::ifstream csv(path("ts.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("step,x1", 0), 0u);
}

TEST_F(Cli, CentralSynthesis) {
  ASSERT_EQ(run("gen-oscillator --topology triangle --out " + path("tri.json")).code, 0);
  const auto s = run("synth --model " + path("tri.json") + " --mode central --gamma 0.22 --out " +
                     path("k.json") + " --report " + path("r.json"));
  ASSERT_EQ(s.code, 0) << s.out;
  const auto h = run("h2norm --model " + path("tri.json") + " --controllers " + path("k.json"));
  ASSERT_EQ(h.code, 0) << h.out;
  EXPECT_LT(Json::parse(h.out).at("h2").get<double>(), 0.22);
}

TEST_F(Cli, BenchCsv) {
  const auto r = run("bench --sizes 3,5 --modes distributed --out " + path("b.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(path("b.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "L,mode,seed,status,wall_ms,achieved_gamma,verified");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_NE(line.find(",distributed,1,feasible,"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 2);
}
