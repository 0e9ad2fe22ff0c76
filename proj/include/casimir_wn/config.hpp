#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "casimir_wn/log.hpp"
#include "casimir_wn/model.hpp"

namespace casimir_wn {

struct RunConfig {
  CavityParams cavity;
  double t_start = 0.0;
  double t_end = 20.0;
  int samples = 2001;
  double rtol = 1e-10;
  double atol = 1e-12;
  int oracle_cutoff = 40;
  bool emit_transfer_matrix = false;
  std::string output_path;
};

inline void validate(const RunConfig& c) {
  validate(c.cavity);
  if (c.samples < 2) throw ConfigError("samples must be >= 2");
  if (!(c.t_end > c.t_start)) throw ConfigError("t_end must exceed t_start");
  if (!std::isfinite(c.t_start) || !std::isfinite(c.t_end))
    throw ConfigError("time span must be finite");
  if (!(c.rtol > 0.0) || !std::isfinite(c.rtol))
    throw ConfigError("rtol must be positive");
  if (!(c.atol > 0.0) || !std::isfinite(c.atol))
    throw ConfigError("atol must be positive");
  if (c.oracle_cutoff < 4) throw ConfigError("oracle_cutoff must be >= 4");
}

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void warn_unknown(const nlohmann::json& j,
                         std::initializer_list<const char*> known,
                         const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) {
        found = true;
        break;
      }
    if (!found) log::warn("ignoring unknown ", where, " key '", it.key(), "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  RunConfig c;
  detail::warn_unknown(j,
                       {"cavity", "t_start", "t_end", "samples", "rtol", "atol",
                        "oracle_cutoff", "emit_transfer_matrix", "output_path"},
                       "config");
  if (j.contains("cavity")) {
    const auto& cav = j.at("cavity");
    if (!cav.is_object()) throw ConfigError("'cavity' must be an object");
    detail::warn_unknown(cav, {"L", "q0", "phi", "omega_d"}, "cavity");
    detail::read_key(cav, "L", c.cavity.L);
    detail::read_key(cav, "q0", c.cavity.q0);
    detail::read_key(cav, "phi", c.cavity.phi);
    detail::read_key(cav, "omega_d", c.cavity.omega_d);
  }
  detail::read_key(j, "t_start", c.t_start);
  detail::read_key(j, "t_end", c.t_end);
  detail::read_key(j, "samples", c.samples);
  detail::read_key(j, "rtol", c.rtol);
  detail::read_key(j, "atol", c.atol);
  detail::read_key(j, "oracle_cutoff", c.oracle_cutoff);
  detail::read_key(j, "emit_transfer_matrix", c.emit_transfer_matrix);
  detail::read_key(j, "output_path", c.output_path);
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace casimir_wn
