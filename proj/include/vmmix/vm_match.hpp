#pragma once

#include <vector>

#include "vmmix/catalog.hpp"

namespace vmmix {

// `count` identical instances of one shape.
struct VmShape {
  double cores = 0;
  double mem_gb = 0;
  int count = 1;
  bool customized = false;

  double TotalCores() const { return cores * count; }
  double TotalMemGb() const { return mem_gb * count; }
  // On-demand rate of all instances, in bundle units.
  double Rate(const PricingCatalog& catalog) const { return count * RateForShape(catalog, cores, mem_gb, customized); }

  friend bool operator==(const VmShape&, const VmShape&) = default;
};

// Smallest menu type covering both cores and memory. Requests beyond the
// largest type are spread over several instances of it.
VmShape MatchStandardVm(const std::vector<VmType>& menu, int cores, double mem_gb);

// Customized shape: 1 core stays 1, otherwise the next even count, raised
// until memory fits the per-core cap. Memory is exactly what was asked for.
VmShape MatchCustomVm(const ProviderProfile& profile, int cores, double mem_gb);

// Standard match, or for providers with customized VMs whichever of the
// standard and custom shapes is cheaper (standard on ties).
VmShape MatchVm(const ProviderProfile& profile, const PricingCatalog& catalog, int cores, double mem_gb);

}  // namespace vmmix
