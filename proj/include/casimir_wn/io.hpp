#pragma once

#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "casimir_wn/errors.hpp"

namespace casimir_wn {
namespace io {

/// 17 significant digits, lowercase scientific: enough to round-trip a double.
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", x);
  return buf;
}

inline std::string fmt(std::optional<double> x) {
  return x ? fmt(*x) : std::string();
}

/// re+imj / re-imj with both parts in the same 17-digit format.
inline std::string fmt(std::complex<double> z) {
  std::string s = fmt(z.real());
  s += (z.imag() < 0.0 || (z.imag() == 0.0 && std::signbit(z.imag()))) ? "" : "+";
  s += fmt(z.imag());
  s += "j";
  return s;
}

/// Write content to path via a temp file and rename, so readers never
/// observe a half-written file.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("rename to " + target.string() + " failed: " + ec.message());
  }
}

}  // namespace io
}  // namespace casimir_wn
