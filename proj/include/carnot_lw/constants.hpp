#pragma once

// Exponent/constant pairs (c, D) for entropy subadditivity
//   sum_j c_j S(f_(p_j)) <= S(f) + D,
// equivalently the multilinear bound with Lebesgue exponents 1/c_j and constant e^D.
// Weights are exact rationals; D keeps an exact rational coefficient on ln ||R||.

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/error.hpp"
#include "carnot_lw/group.hpp"

namespace carnot_lw {

using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

inline double to_double(const Rational& r) { return boost::rational_cast<double>(r); }

/// Parses "p/q", "p", or a JSON number (decimals become the nearest fraction with
/// denominator at most 10^6).
inline Rational parse_rational(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number()) {
    const double x = j.get<double>();
    require(std::isfinite(x), "rational value must be finite");
    // continued fraction
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double v = x;
    for (int it = 0; it < 40; ++it) {
      const double a = std::floor(v);
      const auto ai = static_cast<std::int64_t>(a);
      const std::int64_t h2 = ai * h1 + h0, k2 = ai * k1 + k0;
      if (k2 > 1000000) break;
      h0 = h1; h1 = h2; k0 = k1; k1 = k2;
      if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) < 1e-15 * std::max(1.0, std::abs(x))) break;
      const double frac = v - a;
      if (frac < 1e-15) break;
      v = 1.0 / frac;
    }
    return Rational(h1, k1);
  }
  require(j.is_string(), "rational must be a number or a \"p/q\" string");
  const auto s = j.get<std::string>();
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(s));
    const auto den = std::stoll(s.substr(slash + 1));
    require(den != 0, "rational with zero denominator: " + s);
    return Rational(std::stoll(s.substr(0, slash)), den);
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) throw;
    throw InvalidArgument("malformed rational '" + s + "'");
  }
}

/// D = r * ln ||R|| + sum_i a_i ln(alpha_i) + offset, with r and a_i rational.
struct LogConstant {
  Rational log_r{0};
  std::vector<std::pair<Rational, double>> log_terms;  // (coefficient, ln value)
  double offset = 0.0;

  double value(double r_norm) const {
    require(r_norm > 0.0, "||R|| must be positive");
    double v = to_double(log_r) * std::log(r_norm) + offset;
    for (const auto& [c, l] : log_terms) v += to_double(c) * l;
    return v;
  }

  LogConstant scaled(const Rational& s) const {
    LogConstant out{log_r * s, {}, offset * to_double(s)};
    for (const auto& [c, l] : log_terms) out.log_terms.emplace_back(c * s, l);
    return out;
  }

  friend LogConstant operator+(const LogConstant& a, const LogConstant& b) {
    LogConstant out{a.log_r + b.log_r, a.log_terms, a.offset + b.offset};
    out.log_terms.insert(out.log_terms.end(), b.log_terms.begin(), b.log_terms.end());
    return out;
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(log_r) << " ln|R|";
    for (const auto& [c, l] : log_terms) os << (c < 0 ? " - " : " + ") << to_string(abs(c)) << " ln(" << std::exp(l) << ")";
    if (offset != 0.0) os << (offset < 0 ? " - " : " + ") << std::abs(offset);
    return os.str();
  }
};

struct ScaledData {
  std::vector<Rational> c;
  LogConstant D;
  std::optional<std::int64_t> Q;

  Rational weight_sum() const {
    Rational s(0);
    for (const auto& v : c) s += v;
    return s;
  }

  /// Lebesgue exponents p_j = 1 / c_j.
  std::vector<Rational> exponents() const {
    std::vector<Rational> p;
    for (const auto& v : c) p.push_back(1 / v);
    return p;
  }

  void validate() const {
    require(!c.empty(), "scaled data needs at least one weight");
    for (const auto& v : c) require(v > 0, "weights c_j must be positive");
    if (Q) {
      require(*Q >= 2, "homogeneous dimension must be at least 2");
      require(weight_sum() == Rational(*Q, *Q - 1), "weights must sum to Q/(Q-1)");
    }
  }
};

inline nlohmann::json to_json(const LogConstant& d, double r_norm) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [c, l] : d.log_terms) terms.push_back({{"coef", to_string(c)}, {"log", l}});
  return {{"log_r", to_string(d.log_r)}, {"terms", terms}, {"offset", d.offset}, {"value", d.value(r_norm)}};
}

inline nlohmann::json to_json(const ScaledData& s, double r_norm) {
  nlohmann::json c = nlohmann::json::array(), p = nlohmann::json::array();
  for (const auto& v : s.c) c.push_back(to_string(v));
  for (const auto& v : s.exponents()) p.push_back(to_string(v));
  nlohmann::json out = {{"c", c}, {"exponents", p}, {"D", to_json(s.D, r_norm)}};
  if (s.Q) out["Q"] = *s.Q;
  return out;
}

/// {"c": ["2/3", 0.5, ...], "D": number | {"log_r": "1", "offset": x}, "Q": optional int}.
inline ScaledData scaled_data_from_json(const nlohmann::json& j) {
  ScaledData s;
  try {
    for (const auto& v : j.at("c")) s.c.push_back(parse_rational(v));
    const auto& d = j.at("D");
    if (d.is_number()) {
      s.D.offset = d.get<double>();
    } else {
      if (d.contains("log_r")) s.D.log_r = parse_rational(d.at("log_r"));
      if (d.contains("offset")) s.D.offset = d.at("offset").get<double>();
      if (d.contains("terms"))
        for (const auto& t : d.at("terms")) s.D.log_terms.emplace_back(parse_rational(t.at("coef")), t.at("log").get<double>());
    }
    if (j.contains("Q")) s.Q = j.at("Q").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed scaled data: ") + e.what());
  }
  s.validate();
  return s;
}

/// Weights and constant of the Loomis-Whitney inequality on H(d, alpha):
/// c_j = 1/(d+2n+1) on commuting axes, (n+1)/(n(d+2n+1)) on paired axes, and
/// D = 3/(d+2n+1) ln ||R|| - sum ln(alpha_i) / (n(d+2n+1)).
inline ScaledData corank_constants(const CorankGroup& g) {
  const auto d = static_cast<std::int64_t>(g.d()), n = static_cast<std::int64_t>(g.n());
  const std::int64_t m = d + 2 * n + 1;
  ScaledData s;
  for (std::int64_t j = 0; j < d; ++j) s.c.emplace_back(1, m);
  for (std::int64_t j = 0; j < 2 * n; ++j) s.c.emplace_back(n + 1, n * m);
  s.D.log_r = Rational(3, m);
  for (double a : g.alpha()) s.D.log_terms.emplace_back(Rational(-1, n * m), std::log(a));
  s.Q = static_cast<std::int64_t>(g.homogeneous_dim());
  s.validate();
  return s;
}

/// Constant of the H^1 inequality after the substitution t -> alpha t.
inline ScaledData h1_entropy_constant(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be positive");
  ScaledData s{{Rational(2, 3), Rational(2, 3)}, {}, 4};
  s.D.log_r = Rational(1);
  s.D.log_terms.emplace_back(Rational(-1, 3), std::log(alpha));
  return s;
}

/// Loomis-Whitney on R^k: c_j = 1/(k-1), D = 0, homogeneous dimension k.
inline ScaledData euclidean_constants(std::int64_t k) {
  require(k >= 2, "Euclidean Loomis-Whitney needs k >= 2");
  ScaledData s{std::vector<Rational>(static_cast<std::size_t>(k), Rational(1, k - 1)), {}, k};
  return s;
}

/// Constants on the product of two spaces (projections of each factor extended by the
/// identity on the other). With S = sum c, S' = sum c':
///   c-bar = (c (S'-1), c' (S-1)) / (S S' - 1),  D-bar = ((S'-1) D + (S-1) D') / (S S' - 1).
inline ScaledData product_combine(const ScaledData& a, const ScaledData& b) {
  a.validate();
  b.validate();
  const Rational sa = a.weight_sum(), sb = b.weight_sum();
  require(sa > 1 && sb > 1, "product_combine needs weight sums greater than 1");
  const Rational den = sa * sb - 1;
  ScaledData out;
  for (const auto& v : a.c) out.c.push_back(v * (sb - 1) / den);
  for (const auto& v : b.c) out.c.push_back(v * (sa - 1) / den);
  out.D = a.D.scaled((sb - 1) / den) + b.D.scaled((sa - 1) / den);
  if (a.Q && b.Q) out.Q = *a.Q + *b.Q;
  out.validate();
  return out;
}

/// Product with a line R (one extra projection deleting the line coordinate, listed first):
///   c-bar = ((S-1)/S, c/S),  D-bar = D/S.
inline ScaledData product_combine_line(const ScaledData& a) {
  a.validate();
  const Rational s = a.weight_sum();
  require(s > 1, "product_combine_line needs weight sum greater than 1");
  ScaledData out;
  out.c.push_back((s - 1) / s);
  for (const auto& v : a.c) out.c.push_back(v / s);
  out.D = a.D.scaled(1 / s);
  if (a.Q) out.Q = *a.Q + 1;
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// ||R||_{3/2 -> 3} configuration.

/// Best lower bound from estimate_radon_norm_lb over all built-in families at
/// resolutions {256, 512}, seed 0. Recomputed by the test suite.
inline constexpr double kRadonNormLowerBound = 2.0929897;
inline constexpr double kRadonSafetyFactor = 1.05;

/// Default ||R|| used in every constant: the computed lower bound times the safety factor,
/// unless CARNOT_LW_RNORM is set.
inline double default_r_norm() {
  if (const char* env = std::getenv("CARNOT_LW_RNORM")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !std::isfinite(v) || v <= 0.0)
      throw InvalidArgument(std::string("CARNOT_LW_RNORM must be a positive number, got '") + env + "'");
    return v;
  }
  return kRadonNormLowerBound * kRadonSafetyFactor;
}

/// C(d, alpha) = ||R||^{3/(d+2n+1)} / (prod alpha_i)^{1/(n(d+2n+1))}.
inline double lw_constant(const CorankGroup& g, double r_norm) {
  return std::exp(corank_constants(g).D.value(r_norm));
}

}  // namespace carnot_lw
