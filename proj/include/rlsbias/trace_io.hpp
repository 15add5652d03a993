#pragma once

/** @file
 * CSV emission for traces and asymptote reference lines.
 *
 * Trace columns, one row per step:
 *   k, err_1..err_n, err_norm, kappa, delta_kappa,
 *   logslope_of_avg, avg_of_logslope, logslope_ma100, kerr_1..kerr_n
 * where kerr_m = k (theta_{k,(m)} - theta_(m)). Missing values are empty
 * fields. Doubles are written in shortest round-trip form.
 */

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "rlsbias/diagnostics.hpp"
#include "rlsbias/errors.hpp"

namespace rlsbias {

inline constexpr long kSlopeAverageWindow = 100;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void put(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_double(*v);
}

}  // namespace detail

inline std::string trace_csv(const Trace& trace) {
  if (trace.empty()) throw DimensionError("trace_csv: empty trace");
  const Index n = trace.front().abs_error.size();
  std::string out = "k";
  for (Index m = 1; m <= n; ++m) out += ",err_" + std::to_string(m);
  out += ",err_norm,kappa,delta_kappa,logslope_of_avg,avg_of_logslope,logslope_ma100";
  for (Index m = 1; m <= n; ++m) out += ",kerr_" + std::to_string(m);
  out += '\n';

  std::vector<std::optional<double>> slopes;
  slopes.reserve(trace.size());
  for (const TraceRecord& rec : trace) slopes.push_back(rec.log_slope);
  const auto ma = moving_average(std::span<const std::optional<double>>(slopes), kSlopeAverageWindow);

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRecord& rec = trace[i];
    out += std::to_string(rec.k);
    for (Index m = 0; m < n; ++m) detail::put(out, rec.abs_error(m));
    detail::put(out, rec.error_norm);
    detail::put(out, rec.kappa);
    detail::put(out, rec.delta_kappa);
    detail::put(out, rec.log_slope);
    detail::put(out, rec.mean_log_slope ? rec.mean_log_slope : rec.log_slope);
    detail::put(out, ma[i]);
    for (Index m = 0; m < n; ++m) detail::put(out, rec.scaled_error(m));
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline void emit_csv(const Trace& trace, const std::string& path) { write_text_file(path, trace_csv(trace)); }

/// Reference values for overlays: v_m (predicted limit of k (theta_k - theta))
/// and kappa(C), repeated on each row.
inline std::string asymptote_csv(const Vector& v, double kappa_c) {
  std::string out = "m,v,abs_v,kappa_C\n";
  for (Index m = 0; m < v.size(); ++m) {
    out += std::to_string(m + 1) + ',' + format_double(v(m)) + ',' + format_double(std::abs(v(m))) + ',' +
           format_double(kappa_c) + '\n';
  }
  return out;
}

}  // namespace rlsbias
