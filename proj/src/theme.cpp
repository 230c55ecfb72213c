#include "leaklab/theme.hpp"

#include <cctype>
#include <cmath>

#include "leaklab/hash.hpp"

namespace leaklab {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ThemeVec theme_embed(std::string_view text) {
  ThemeVec v{};
  for (const std::string& tok : tokenize(text)) {
    const std::uint64_t h = fnv1a64(tok);
    const int bucket = static_cast<int>(h % kThemeDim);
    const double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  const double n = theme_norm(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return v;
}

double theme_cosine(const ThemeVec& a, const ThemeVec& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < kThemeDim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double theme_norm(const ThemeVec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace leaklab
