#include "vmmix/vm_match.hpp"

#include <algorithm>
#include <cmath>

#include "vmmix/error.hpp"

namespace vmmix {

VmShape MatchStandardVm(const std::vector<VmType>& menu, int cores, double mem_gb) {
  if (cores < 1 || !(mem_gb > 0)) throw DataError("match_vm: cores must be >= 1 and memory > 0");
  if (menu.empty()) throw DataError("match_vm: empty VM menu");
  const VmType* best = nullptr;
  for (const VmType& t : menu) {
    if (t.cores >= cores && t.mem_gb >= mem_gb) {
      if (!best || t.cores < best->cores || (t.cores == best->cores && t.mem_gb < best->mem_gb)) best = &t;
    }
  }
  if (best) return VmShape{static_cast<double>(best->cores), best->mem_gb, 1, false};

  const VmType& largest = *std::max_element(menu.begin(), menu.end(), [](const VmType& a, const VmType& b) {
    return a.cores < b.cores || (a.cores == b.cores && a.mem_gb < b.mem_gb);
  });
  const int count = static_cast<int>(std::max(std::ceil(static_cast<double>(cores) / largest.cores),
                                              std::ceil(mem_gb / largest.mem_gb)));
  return VmShape{static_cast<double>(largest.cores), largest.mem_gb, count, false};
}

VmShape MatchCustomVm(const ProviderProfile& profile, int cores, double mem_gb) {
  if (cores < 1 || !(mem_gb > 0)) throw DataError("match_vm: cores must be >= 1 and memory > 0");
  int c = cores == 1 ? 1 : cores + (cores % 2);
  while (mem_gb > profile.customized_max_gb_per_core * c) c = c == 1 ? 2 : c + 2;
  return VmShape{static_cast<double>(c), mem_gb, 1, true};
}

VmShape MatchVm(const ProviderProfile& profile, const PricingCatalog& catalog, int cores, double mem_gb) {
  VmShape standard = MatchStandardVm(profile.vm_types, cores, mem_gb);
  if (!profile.allows_customized) return standard;
  VmShape custom = MatchCustomVm(profile, cores, mem_gb);
  return custom.Rate(catalog) < standard.Rate(catalog) ? custom : standard;
}

}  // namespace vmmix
