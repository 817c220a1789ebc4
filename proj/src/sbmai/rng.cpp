#include "sbmai/rng.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

namespace sbmai {

std::uint64_t mix64(std::uint64_t z) {
  // splitmix64 finaliser
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t counter_u64(std::uint64_t key, Stream stream,
                          std::uint64_t index) {
  const std::uint64_t k = mix64(key ^ mix64(static_cast<std::uint64_t>(stream) *
                                            0xd1b54a32d192ed03ULL));
  return mix64(k ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::uint64_t bits) {
  const double u = uniform_open(bits);
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace sbmai
