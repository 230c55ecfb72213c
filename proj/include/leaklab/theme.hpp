#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace leaklab {

constexpr int kThemeDim = 64;
using ThemeVec = std::array<double, kThemeDim>;

// Lowercased tokens split on non-alphanumeric boundaries.
std::vector<std::string> tokenize(std::string_view text);

// Deterministic hashed bag-of-words embedding, unit L2 norm when any token
// hashed in, all-zero otherwise.
ThemeVec theme_embed(std::string_view text);

// Cosine similarity; 0 when either side is all-zero.
double theme_cosine(const ThemeVec& a, const ThemeVec& b);

double theme_norm(const ThemeVec& v);

}  // namespace leaklab
