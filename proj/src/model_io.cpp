#include "dh2/model_io.hpp"

#include <fstream>
#include <sstream>

namespace dh2 {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::ParseError, what);
}

struct BlockSpec {
  const char* name;
  Mat SubsystemRealization::*member;
  char rows;  // one of k n f q u y
  char cols;
};

constexpr BlockSpec kBlocks[] = {
    {"ATT", &SubsystemRealization::ATT, 'k', 'k'}, {"ATS", &SubsystemRealization::ATS, 'k', 'n'},
    {"AST", &SubsystemRealization::AST, 'n', 'k'}, {"ASS", &SubsystemRealization::ASS, 'n', 'n'},
    {"BTd", &SubsystemRealization::BTd, 'k', 'f'}, {"BSd", &SubsystemRealization::BSd, 'n', 'f'},
    {"BTu", &SubsystemRealization::BTu, 'k', 'u'}, {"BSu", &SubsystemRealization::BSu, 'n', 'u'},
    {"CzT", &SubsystemRealization::CzT, 'q', 'k'}, {"CzS", &SubsystemRealization::CzS, 'q', 'n'},
    {"Dzd", &SubsystemRealization::Dzd, 'q', 'f'}, {"Dzu", &SubsystemRealization::Dzu, 'q', 'u'},
    {"CyT", &SubsystemRealization::CyT, 'y', 'k'}, {"CyS", &SubsystemRealization::CyS, 'y', 'n'},
    {"Dyd", &SubsystemRealization::Dyd, 'y', 'f'}, {"Dyu", &SubsystemRealization::Dyu, 'y', 'u'},
};

int get_int(const Json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    parse_fail(ctx + ": missing integer field '" + key + "'");
  return j.at(key).get<int>();
}

}  // namespace

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) parse_fail(what + ": expected an array of rows");
  if (j.empty()) return Mat(0, 0);
  const size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  return matrix_from_json(j, static_cast<int>(j.size()), static_cast<int>(cols), what);
}

Mat matrix_from_json(const Json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array()) parse_fail(what + ": expected an array of rows");
  Mat m(rows, cols);
  if (rows == 0 || cols == 0) {
    // [] or [[], [], ...] are both accepted for empty shapes
    if (!(j.empty() || static_cast<int>(j.size()) == rows)) parse_fail(what + ": shape mismatch");
    return m;
  }
  if (static_cast<int>(j.size()) != rows) {
    std::ostringstream os;
    os << what << ": expected " << rows << " rows, got " << j.size();
    parse_fail(os.str());
  }
  for (int r = 0; r < rows; ++r) {
    const Json& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      std::ostringstream os;
      os << what << ": row " << r << " should have " << cols << " entries";
      parse_fail(os.str());
    }
    for (int c = 0; c < cols; ++c) {
      if (!row.at(c).is_number()) parse_fail(what + ": non-numeric entry");
      m(r, c) = row.at(c).get<double>();
    }
  }
  return m;
}

Json model_to_json(const NetworkModel& model) {
  Json out;
  out["nodes"] = Json::array();
  for (const auto& nd : model.nodes) {
    Json jn;
    jn["dims"] = {{"k", nd.k()}, {"n", nd.n()}, {"f", nd.f()},
                  {"q", nd.q()}, {"nu", nd.nu()}, {"ny", nd.ny()}};
    for (const auto& b : kBlocks) jn[b.name] = matrix_to_json(nd.*(b.member));
    out["nodes"].push_back(std::move(jn));
  }
  out["edges"] = Json::array();
  for (auto [i, j] : model.topology.edges())
    out["edges"].push_back({{"i", i + 1}, {"j", j + 1}, {"n_ij", model.topology.width(i, j)}});
  return out;
}

NetworkModel model_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array())
    parse_fail("model: expected an object with a 'nodes' array");
  const int L = static_cast<int>(j.at("nodes").size());
  NetworkModel model;
  model.topology = Topology(L);
  if (j.contains("edges")) {
    if (!j.at("edges").is_array()) parse_fail("model: 'edges' must be an array");
    for (const auto& e : j.at("edges")) {
      const int a = get_int(e, "i", "edge") - 1, b = get_int(e, "j", "edge") - 1;
      const int w = get_int(e, "n_ij", "edge");
      if (a < 0 || b < 0 || a >= L || b >= L || a == b || w < 0)
        parse_fail("edge: invalid endpoints or width");
      if (model.topology.width(a, b) != 0) parse_fail("edge: duplicate pair");
      model.topology.set_width(a, b, w);
    }
  }
  for (int i = 0; i < L; ++i) {
    const Json& jn = j.at("nodes").at(i);
    const std::string ctx = "node " + std::to_string(i + 1);
    if (!jn.is_object() || !jn.contains("dims")) parse_fail(ctx + ": missing 'dims'");
    const Json& d = jn.at("dims");
    const int dims[6] = {get_int(d, "k", ctx), get_int(d, "n", ctx), get_int(d, "f", ctx),
                         get_int(d, "q", ctx), get_int(d, "nu", ctx), get_int(d, "ny", ctx)};
    for (int v : dims)
      if (v < 0) parse_fail(ctx + ": negative dimension");
    auto size_of = [&](char c) {
      switch (c) {
        case 'k': return dims[0];
        case 'n': return dims[1];
        case 'f': return dims[2];
        case 'q': return dims[3];
        case 'u': return dims[4];
        default: return dims[5];
      }
    };
    SubsystemRealization s =
        SubsystemRealization::zeros(dims[0], dims[1], dims[2], dims[3], dims[4], dims[5]);
    for (const auto& b : kBlocks) {
      if (!jn.contains(b.name)) continue;  // absent blocks are zero
      s.*(b.member) = matrix_from_json(jn.at(b.name), size_of(b.rows), size_of(b.cols),
                                       ctx + " block " + b.name);
    }
    model.nodes.push_back(std::move(s));
  }
  try {
    model.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::HypothesisViolated) throw;
    parse_fail(std::string("model: ") + e.what());
  }
  return model;
}

Json multipliers_to_json(const MultiplierSet& m) {
  Json out = Json::array();
  for (const auto& [k, v] : m.x11)
    out.push_back({{"i", k.first + 1}, {"j", k.second + 1}, {"X11", matrix_to_json(v)}});
  for (const auto& [k, v] : m.x12)
    out.push_back({{"i", k.first + 1}, {"j", k.second + 1}, {"X12", matrix_to_json(v)}});
  return out;
}

MultiplierSet multipliers_from_json(const Json& j, const Topology& topology) {
  MultiplierSet m;
  if (!j.is_array()) parse_fail("multipliers: expected an array");
  for (const auto& e : j) {
    const int a = get_int(e, "i", "multiplier") - 1, b = get_int(e, "j", "multiplier") - 1;
    if (a < 0 || b < 0 || a >= topology.node_count() || b >= topology.node_count() || a == b)
      parse_fail("multiplier: invalid pair");
    const int w = topology.width(a, b);
    if (e.contains("X11")) m.x11[{a, b}] = matrix_from_json(e.at("X11"), w, w, "X11");
    if (e.contains("X12")) {
      if (a <= b) parse_fail("multiplier: X12 must be given for i > j");
      m.x12[{a, b}] = matrix_from_json(e.at("X12"), w, w, "X12");
    }
  }
  try {
    m.validate(topology);
  } catch (const Error& e) {
    parse_fail(std::string("multipliers: ") + e.what());
  }
  return m;
}

Json certificate_to_json(const AnalysisCertificate& cert) {
  Json out;
  out["gamma"] = cert.gamma;
  out["nodes"] = Json::array();
  for (size_t i = 0; i < cert.X.size(); ++i)
    out["nodes"].push_back({{"X", matrix_to_json(cert.X[i])}, {"rho", cert.rho[i]}});
  out["multipliers"] = multipliers_to_json(cert.mult);
  return out;
}

AnalysisCertificate certificate_from_json(const Json& j, const NetworkModel& model) {
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array())
    parse_fail("certificate: expected an object with a 'nodes' array");
  AnalysisCertificate c;
  c.gamma = j.value("gamma", 0.0);
  const auto& nodes = j.at("nodes");
  if (static_cast<int>(nodes.size()) != model.topology.node_count())
    parse_fail("certificate: node count differs from model");
  for (size_t i = 0; i < nodes.size(); ++i) {
    const int k = model.nodes[i].k();
    if (!nodes[i].contains("X") || !nodes[i].contains("rho"))
      parse_fail("certificate: node entries need 'X' and 'rho'");
    c.X.push_back(matrix_from_json(nodes[i].at("X"), k, k, "certificate X"));
    if (!nodes[i].at("rho").is_number()) parse_fail("certificate: rho must be a number");
    c.rho.push_back(nodes[i].at("rho").get<double>());
  }
  c.mult = j.contains("multipliers") ? multipliers_from_json(j.at("multipliers"), model.topology)
                                     : MultiplierSet::zeros(model.topology);
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) parse_fail("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    parse_fail(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << j.dump(1) << '\n';
}

}  // namespace dh2
