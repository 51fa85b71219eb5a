// Rewrite equivalence: a flow and its rewritten form produce the same
// output payloads under forced-local and forced-remote offloading.
#pragma once

#include <cstdint>
#include <string>

namespace gen {

struct EquivalenceReport {
  int flows = 0;
  int mismatches = 0;
  std::string first_mismatch;
};

EquivalenceReport check_rewrite_equivalence(int flows, std::uint64_t seed);

}  // namespace gen
