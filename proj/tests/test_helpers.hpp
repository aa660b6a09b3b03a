#pragma once

#include <map>
#include <random>

#include "epilab/cone.hpp"

namespace epilab::testing {

// Cone builds take a couple of seconds; share them across cases.
inline const cone::ConeModel& cone_of(int d) {
  static std::map<int, cone::ConeModel> cache;
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, cone::build_cone(Dim(d))).first;
  return it->second;
}

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

}  // namespace epilab::testing
