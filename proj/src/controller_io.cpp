#include "dh2/controller_io.hpp"

namespace dh2 {

namespace {

struct ThetaBlock {
  const char* name;
  int row;  // 0: ξ+, 1: o^C, 2: u
  int col;  // 0: ξ, 1: s^C, 2: y
};

constexpr ThetaBlock kTheta[] = {
    {"AKTT", 0, 0}, {"AKTS", 0, 1}, {"BKTy", 0, 2}, {"AKST", 1, 0}, {"AKSS", 1, 1},
    {"BKSy", 1, 2}, {"CKuT", 2, 0}, {"CKuS", 2, 1}, {"DKuy", 2, 2},
};

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::ParseError, what);
}

int field(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<int>() < 0)
    parse_fail(std::string("controller: missing non-negative integer '") + key + "'");
  return j.at(key).get<int>();
}

}  // namespace

Json controllers_to_json(const ControllerRealization& ctrl) {
  Json out;
  out["edges"] = Json::array();
  for (auto [a, b] : ctrl.ctrl_topology.edges())
    out["edges"].push_back({{"i", a + 1}, {"j", b + 1}, {"n_ij", ctrl.ctrl_topology.width(a, b)}});
  out["nodes"] = Json::array();
  for (size_t i = 0; i < ctrl.theta.size(); ++i) {
    const ThetaShape& sh = ctrl.shapes[i];
    const int ro[3] = {0, sh.k, sh.k + sh.nc}, rn[3] = {sh.k, sh.nc, sh.nu};
    const int co[3] = {0, sh.k, sh.k + sh.nc}, cn[3] = {sh.k, sh.nc, sh.ny};
    Json jn;
    jn["dims"] = {{"k", sh.k}, {"nc", sh.nc}, {"nu", sh.nu}, {"ny", sh.ny}};
    for (const auto& b : kTheta)
      jn[b.name] = matrix_to_json(ctrl.theta[i].block(ro[b.row], co[b.col], rn[b.row], cn[b.col]));
    out["nodes"].push_back(std::move(jn));
  }
  return out;
}

ControllerRealization controllers_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array())
    parse_fail("controller: expected an object with a 'nodes' array");
  const int L = static_cast<int>(j.at("nodes").size());
  ControllerRealization c;
  c.ctrl_topology = Topology(L);
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      const int a = field(e, "i") - 1, b = field(e, "j") - 1, w = field(e, "n_ij");
      if (a < 0 || b < 0 || a >= L || b >= L || a == b) parse_fail("controller: invalid edge");
      c.ctrl_topology.set_width(a, b, w);
    }
  }
  for (int i = 0; i < L; ++i) {
    const Json& jn = j.at("nodes").at(i);
    if (!jn.is_object() || !jn.contains("dims")) parse_fail("controller: node without 'dims'");
    const Json& d = jn.at("dims");
    ThetaShape sh{field(d, "k"), field(d, "nc"), field(d, "nu"), field(d, "ny")};
    if (sh.nc != c.ctrl_topology.channel_total(i))
      parse_fail("controller: channel width of node " + std::to_string(i + 1) +
                 " disagrees with its edges");
    const int ro[3] = {0, sh.k, sh.k + sh.nc}, rn[3] = {sh.k, sh.nc, sh.nu};
    const int co[3] = {0, sh.k, sh.k + sh.nc}, cn[3] = {sh.k, sh.nc, sh.ny};
    Mat theta = Mat::Zero(sh.rows(), sh.cols());
    for (const auto& b : kTheta) {
      if (!jn.contains(b.name)) continue;
      theta.block(ro[b.row], co[b.col], rn[b.row], cn[b.col]) =
          matrix_from_json(jn.at(b.name), rn[b.row], cn[b.col], std::string("controller ") + b.name);
    }
    c.theta.push_back(std::move(theta));
    c.shapes.push_back(sh);
  }
  return c;
}

Json central_to_json(const CentralController& k) {
  return {{"AK", matrix_to_json(k.AK)},
          {"BK", matrix_to_json(k.BK)},
          {"CK", matrix_to_json(k.CK)},
          {"DK", matrix_to_json(k.DK)}};
}

CentralController central_from_json(const Json& j) {
  for (const char* key : {"AK", "BK", "CK", "DK"})
    if (!j.contains(key)) parse_fail(std::string("central controller: missing ") + key);
  CentralController k;
  k.AK = matrix_from_json(j.at("AK"), "AK");
  k.BK = matrix_from_json(j.at("BK"), "BK");
  k.CK = matrix_from_json(j.at("CK"), "CK");
  k.DK = matrix_from_json(j.at("DK"), "DK");
  return k;
}

}  // namespace dh2
