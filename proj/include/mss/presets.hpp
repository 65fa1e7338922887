#pragma once

// Built-in closed-form maps used as boundary data, initial guesses and exact
// solutions.

#include <cmath>
#include <array>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mss/error.hpp"
#include "mss/grid.hpp"

namespace mss {

using PresetParams = nlohmann::json;

/// A map x -> f(x) in R^m; `x` has n entries.
using PresetMap = std::function<void(const double* x, double* f)>;

struct Preset {
  int n = 2;
  int m = 1;
  PresetMap map;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"linear", "zero", "bump", "scherk",
                                              "holomorphic_quadratic", "trig",
                                              "random_lipschitz", "scaled"};
  return names;
}

namespace detail {

inline double number_param(const PresetParams& params, const char* key, double fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  if (!params.at(key).is_number()) {
    throw Error(ErrorCode::invalid_argument, std::string("preset parameter '") + key +
                                                 "' must be a number");
  }
  return params.at(key).get<double>();
}

inline void reject_unknown_keys(const PresetParams& params, const std::string& preset,
                                std::initializer_list<const char*> allowed) {
  if (params.is_null()) return;
  if (!params.is_object()) {
    throw Error(ErrorCode::invalid_argument, "preset parameters must be a JSON object");
  }
  for (const auto& [key, value] : params.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      throw Error(ErrorCode::invalid_argument,
                  "unknown parameter '" + key + "' for preset '" + preset + "'");
    }
  }
}

inline void require_dims(const std::string& preset, int n, int m, int want_n, int want_m) {
  if ((want_n > 0 && n != want_n) || (want_m > 0 && m != want_m)) {
    throw Error(ErrorCode::dimension_mismatch,
                "preset '" + preset + "' requires n = " + std::to_string(want_n) +
                    (want_m > 0 ? ", m = " + std::to_string(want_m) : std::string()) +
                    "; got n = " + std::to_string(n) + ", m = " + std::to_string(m));
  }
}

}  // namespace detail

/// Closed-form preset maps:
///   linear                 f = A x + b                    {"A": m x n, "b": m}
///   zero                   f = 0
///   bump                   f^a = amplitude prod_k sin(pi (x_k - lo_k) / (hi_k - lo_k))
///   scherk                 f = ln(cos(a x) / cos(a y)) / a     (n = 2, m = 1)
///   holomorphic_quadratic  f = (c (x^2 - y^2), 2 c x y) = c z^2 (n = m = 2)
///   trig                   f^a = amplitude sin(k x_1 + a) cos(k x_2)
///   random_lipschitz       sum of seeded random Fourier modes, Lipschitz <= amplitude
///   scaled                 factor * inner preset
/// The bump uses the box corners `lower`/`upper`.
inline Preset make_preset(const std::string& name, const PresetParams& params, int n, int m,
                          std::array<double, kMaxGridDim> lower = {-1.0, -1.0, -1.0},
                          std::array<double, kMaxGridDim> upper = {1.0, 1.0, 1.0}) {
  using detail::number_param;
  Preset out{n, m, {}};
  if (name == "linear") {
    detail::reject_unknown_keys(params, name, {"A", "b"});
    std::vector<double> a(static_cast<std::size_t>(m * n), 0.0);
    std::vector<double> b(static_cast<std::size_t>(m), 0.0);
    if (params.is_object() && params.contains("A")) {
      const auto& rows = params.at("A");
      if (!rows.is_array() || static_cast<int>(rows.size()) != m) {
        throw Error(ErrorCode::dimension_mismatch, "linear preset: A must have m rows");
      }
      for (int r = 0; r < m; ++r) {
        if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n) {
          throw Error(ErrorCode::dimension_mismatch, "linear preset: A rows must have n entries");
        }
        for (int c = 0; c < n; ++c) a[r * n + c] = rows[r][c].get<double>();
      }
    }
    if (params.is_object() && params.contains("b")) {
      const auto& bv = params.at("b");
      if (!bv.is_array() || static_cast<int>(bv.size()) != m) {
        throw Error(ErrorCode::dimension_mismatch, "linear preset: b must have m entries");
      }
      for (int r = 0; r < m; ++r) b[r] = bv[r].get<double>();
    }
    out.map = [a, b, n, m](const double* x, double* f) {
      for (int r = 0; r < m; ++r) {
        double s = b[r];
        for (int c = 0; c < n; ++c) s += a[r * n + c] * x[c];
        f[r] = s;
      }
    };
  } else if (name == "zero") {
    detail::reject_unknown_keys(params, name, {});
    out.map = [m](const double*, double* f) {
      for (int r = 0; r < m; ++r) f[r] = 0.0;
    };
  } else if (name == "bump") {
    detail::reject_unknown_keys(params, name, {"amplitude"});
    const double amplitude = number_param(params, "amplitude", 0.5);
    out.map = [=](const double* x, double* f) {
      double s = amplitude;
      for (int k = 0; k < n; ++k) {
        const double t = (x[k] - lower[k]) / (upper[k] - lower[k]);
        s *= (t <= 0.0 || t >= 1.0) ? 0.0 : std::sin(std::numbers::pi * t);
      }
      for (int r = 0; r < m; ++r) f[r] = s;
    };
  } else if (name == "scherk") {
    detail::reject_unknown_keys(params, name, {"a"});
    detail::require_dims(name, n, m, 2, 1);
    const double a = number_param(params, "a", 1.0);
    if (!(a > 0.0)) throw Error(ErrorCode::invalid_argument, "scherk: a must be positive");
    for (int k = 0; k < 2; ++k) {
      if (std::max(std::abs(lower[k]), std::abs(upper[k])) * a >= std::numbers::pi / 2) {
        throw Error(ErrorCode::invalid_argument,
                    "scherk: box must lie inside |a x|, |a y| < pi/2");
      }
    }
    out.map = [a](const double* x, double* f) {
      f[0] = std::log(std::cos(a * x[0]) / std::cos(a * x[1])) / a;
    };
  } else if (name == "holomorphic_quadratic") {
    detail::reject_unknown_keys(params, name, {"c"});
    detail::require_dims(name, n, m, 2, 2);
    const double c = number_param(params, "c", 0.3);
    out.map = [c](const double* x, double* f) {
      f[0] = c * (x[0] * x[0] - x[1] * x[1]);
      f[1] = 2.0 * c * x[0] * x[1];
    };
  } else if (name == "trig") {
    detail::reject_unknown_keys(params, name, {"amplitude", "frequency"});
    const double amplitude = number_param(params, "amplitude", 0.2);
    const double k = number_param(params, "frequency", 1.0);
    out.map = [=](const double* x, double* f) {
      for (int r = 0; r < m; ++r) f[r] = amplitude * std::sin(k * x[0] + r) * std::cos(k * x[1]);
    };
  } else if (name == "random_lipschitz") {
    detail::reject_unknown_keys(params, name, {"seed", "amplitude", "modes"});
    const double amplitude = number_param(params, "amplitude", 0.3);
    const int modes = static_cast<int>(number_param(params, "modes", 4));
    const auto seed = static_cast<std::uint64_t>(number_param(params, "seed", 0));
    if (modes < 1) throw Error(ErrorCode::invalid_argument, "random_lipschitz: modes must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    // Each mode: coefficient c, wave vector w, phase; the Lipschitz constant of
    // each component is at most sum |c| |w| = amplitude after normalization.
    struct Mode {
      double coeff;
      std::array<double, kMaxGridDim> wave;
      double phase;
    };
    std::vector<std::vector<Mode>> comps(static_cast<std::size_t>(m));
    for (auto& comp : comps) {
      double lip = 0.0;
      for (int j = 0; j < modes; ++j) {
        Mode md{unit(rng), {0.0, 0.0, 0.0}, std::numbers::pi * unit(rng)};
        double wn = 0.0;
        for (int k = 0; k < n; ++k) {
          md.wave[k] = 2.0 * unit(rng);
          wn += md.wave[k] * md.wave[k];
        }
        lip += std::abs(md.coeff) * std::sqrt(wn);
        comp.push_back(md);
      }
      for (auto& md : comp) md.coeff *= lip > 0.0 ? amplitude / lip : 0.0;
    }
    out.map = [comps, n](const double* x, double* f) {
      for (std::size_t r = 0; r < comps.size(); ++r) {
        double s = 0.0;
        for (const auto& md : comps[r]) {
          double arg = md.phase;
          for (int k = 0; k < n; ++k) arg += md.wave[k] * x[k];
          s += md.coeff * std::sin(arg);
        }
        f[r] = s;
      }
    };
  } else if (name == "scaled") {
    detail::reject_unknown_keys(params, name, {"preset", "params", "factor"});
    if (!params.is_object() || !params.contains("preset") || !params.at("preset").is_string()) {
      throw Error(ErrorCode::invalid_argument, "scaled: needs an inner 'preset' name");
    }
    const std::string inner_name = params.at("preset").get<std::string>();
    if (inner_name == "scaled") {
      throw Error(ErrorCode::invalid_argument, "scaled: inner preset cannot be 'scaled'");
    }
    const PresetParams inner_params =
        params.contains("params") ? params.at("params") : PresetParams::object();
    const double factor = number_param(params, "factor", 1.0);
    Preset inner = make_preset(inner_name, inner_params, n, m, lower, upper);
    out.map = [inner = std::move(inner), factor, m](const double* x, double* f) {
      inner.map(x, f);
      for (int r = 0; r < m; ++r) f[r] *= factor;
    };
  } else {
    throw Error(ErrorCode::unknown_preset, "unknown preset '" + name + "'");
  }
  return out;
}

inline VectorField sample(const Preset& preset, const GridDomain& domain) {
  if (preset.n != domain.n()) {
    throw Error(ErrorCode::dimension_mismatch, "preset dimension does not match the domain");
  }
  std::vector<double> values(domain.node_count() * preset.m);
  for (NodeIndex p = 0; p < domain.node_count(); ++p) {
    const auto x = domain.position(p);
    preset.map(x.data(), values.data() + p * preset.m);
  }
  return VectorField(domain, preset.m, std::move(values));
}

inline VectorField sample_preset(const std::string& name, const PresetParams& params,
                                 const GridDomain& domain, int m) {
  std::array<double, kMaxGridDim> lower{}, upper{};
  for (int k = 0; k < kMaxGridDim; ++k) {
    lower[k] = k < domain.n() ? domain.lower(k) : 0.0;
    upper[k] = k < domain.n() ? domain.upper(k) : 1.0;
  }
  return sample(make_preset(name, params, domain.n(), m, lower, upper), domain);
}

}  // namespace mss
