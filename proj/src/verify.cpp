#include "dh2/analysis.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace dh2 {

VerificationReport verify_closed_loop(const ClosedLoopNetwork& closed,
                                      const std::vector<Mat>& XK, const std::vector<double>& rho,
                                      const MultiplierSet& closed_mult, double gamma) {
  VerificationReport rep;
  rep.gamma = gamma;
  NetworkModel net = closed.network;
  double worst_bsd = 0.0;
  for (auto& nd : net.nodes) {
    if (nd.BSd.size() == 0) continue;
    const double scale = 1.0 + nd.ASS.cwiseAbs().maxCoeff() + nd.AST.cwiseAbs().maxCoeff();
    worst_bsd = std::max(worst_bsd, nd.BSd.cwiseAbs().maxCoeff() / scale);
    nd.BSd.setZero();
  }
  rep.hypothesis_ok = worst_bsd <= 1e-12;
  if (!rep.hypothesis_ok) {
    std::ostringstream os;
    os << "closed-loop disturbance-to-channel block is nonzero (" << worst_bsd << ")";
    throw Error(ErrorCode::HypothesisViolated, os.str());
  }

  AnalysisCertificate cert{XK, rho, closed_mult, gamma};
  rep.residuals = analysis_residuals(net, cert);
  rep.well_posed = well_posed(closed.network);
  std::ostringstream msg;
  if (!rep.well_posed.ok) {
    msg << "closed loop is ill-posed";
    rep.message = msg.str();
    return rep;
  }
  const FlatStateSpace flat = assemble_interconnected(closed.network);
  rep.spectral_radius = spectral_radius(flat.A);
  if (rep.spectral_radius < 1.0) rep.h2 = h2_norm_lyapunov(flat);
  rep.verified = rep.residuals.verified && rep.spectral_radius < 1.0 && rep.h2 < gamma;
  double worst = -std::numeric_limits<double>::infinity();
  for (double v : rep.residuals.lambda_max) worst = std::max(worst, v);
  msg << "worst residual eigenvalue " << worst << ", trace slack " << rep.residuals.slack
      << ", spectral radius " << rep.spectral_radius << ", H2 " << rep.h2;
  rep.message = msg.str();
  return rep;
}

}  // namespace dh2
