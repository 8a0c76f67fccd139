#pragma once

#include "ovseg/dataset_io.hpp"
#include "ovseg/gateway.hpp"

#include <memory>

// Scripted language/vision replies backed by a scene's ground truth, for
// running the retrieval pipeline without external services.
//
// - structuring: rule-based parse of the templated query forms
// - verification: majority ground-truth instance inside the region
// - orientation: tile closest to the requested side of the nearest instance
// - final choice: nearest/farthest/left/right geometry over the listed
//   candidate centroids
namespace ovseg::oracle {

// The scene must carry annotations and per-frame instance maps.
void install(gateway::MockGateway& gw, const dataset::Scene& scene);

std::unique_ptr<gateway::MockGateway> make_gateway(const dataset::Scene& scene, std::size_t dim, std::uint64_t seed);

}  // namespace ovseg::oracle
