#pragma once

#include "dh2/model_io.hpp"
#include "dh2/synthesis.hpp"

namespace dh2 {

// {"edges": [{i, j, n_ij}], "nodes": [{"dims": {k, nc, nu, ny}, nine blocks}]}
// Block rows (ξ+, o^C, u) and columns (ξ, s^C, y) are named
// AKTT AKTS BKTy / AKST AKSS BKSy / CKuT CKuS DKuy.
Json controllers_to_json(const ControllerRealization& ctrl);
ControllerRealization controllers_from_json(const Json& j);

// {"AK", "BK", "CK", "DK"}
Json central_to_json(const CentralController& k);
CentralController central_from_json(const Json& j);

}  // namespace dh2
