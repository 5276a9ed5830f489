#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cce {

// --- strings ---------------------------------------------------------------

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// trim + lowercase; idempotent.
std::string normalize_token(std::string_view s);

// trim, lowercase, strip surrounding quotes and leading/trailing punctuation;
// used to match free-text labels against a fixed category list.
std::string normalize_label(std::string_view s);

std::vector<std::string> split_ws(std::string_view s);

// --- hashing / seeding -------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t v);

std::uint64_t splitmix64(std::uint64_t& state);

// Counter-based seed derivation: child seed i of a root seed, independent of
// how many siblings were drawn before it.
std::uint64_t seed_at(std::uint64_t root, std::uint64_t counter);

// Deterministic uniform double in [0,1) from a seed.
double unit_double(std::uint64_t seed);

// --- numerics ----------------------------------------------------------------

// Pairwise (tree-order) summation; reduction order is fixed so results are
// bit-stable regardless of how the terms were produced.
double pairwise_sum(std::span<const double> values);

} // namespace cce
