#include "lpbesov/report.hpp"

#include <cmath>
#include <fstream>
#include <system_error>

#include "lpbesov/error.hpp"

namespace lpbesov {

Json finite_or_tag(double value) {
  if (std::isfinite(value)) return value;
  return "divergent";
}

Json q_to_json(double q) {
  if (std::isinf(q)) return "inf";
  return q;
}

Json to_json(const BesovParams& params) {
  Json j;
  j["alpha"] = params.alpha;
  j["q"] = q_to_json(params.q);
  j["r"] = params.order();
  j["s_points"] = params.s_points;
  j["s_min"] = params.s_min ? Json(*params.s_min) : Json(nullptr);
  j["tau_samples"] = params.tau_samples;
  j["experimental"] = params.experimental;
  j["semigroup_c"] = params.semigroup_c;
  return j;
}

Json to_json(const SeminormResult& seminorm) {
  Json j;
  j["value"] = finite_or_tag(seminorm.value);
  j["status"] = std::string(to_string(seminorm.status));
  j["tail_coefficient"] = finite_or_tag(seminorm.tail_coefficient);
  j["tail_exponent"] = seminorm.tail_exponent;
  j["s_min"] = seminorm.s_min;
  j["s_points"] = seminorm.s_points;
  return j;
}

Json to_json(const DyadicResult& dyadic) {
  Json j;
  j["total"] = finite_or_tag(dyadic.total);
  j["term"] = finite_or_tag(dyadic.term);
  Json bands = Json::array();
  for (double v : dyadic.band_norms) bands.push_back(finite_or_tag(v));
  j["band_norms"] = std::move(bands);
  return j;
}

Json to_json(const BandComponents& bands) {
  Json j;
  j["source_norm"] = bands.source_norm;
  Json norms = Json::array();
  for (double v : bands.norms()) norms.push_back(finite_or_tag(v));
  j["band_norms"] = std::move(norms);
  j["energy"] = finite_or_tag(bands.energy());
  return j;
}

Json to_json(const FilteredNorm& norm) {
  Json j;
  j["value"] = finite_or_tag(norm.value);
  j["elementary_margin"] = finite_or_tag(norm.elementary_margin);
  j["half_power_margin"] = finite_or_tag(norm.half_power_margin);
  return j;
}

Json to_json(const LemmaBound& bound) {
  Json j;
  Json rows = Json::array();
  for (std::size_t i = 0; i < bound.s_values.size(); ++i) {
    rows.push_back({{"s", bound.s_values[i]},
                    {"lhs", finite_or_tag(bound.lhs[i])},
                    {"rhs", finite_or_tag(bound.rhs[i])}});
  }
  j["samples"] = std::move(rows);
  j["constant"] = finite_or_tag(bound.constant);
  j["grows_with_refinement"] = bound.grows_with_refinement;
  return j;
}

Json to_json(const EquivalenceReport& report) {
  Json j;
  j["label"] = report.label;
  j["params"] = to_json(report.params);
  j["window_sharpness"] = report.window_sharpness;
  j["max_level"] = report.max_level;
  j["signal_norm"] = report.signal_norm;
  j["integral_side"] = finite_or_tag(report.integral_side);
  j["dyadic_side"] = finite_or_tag(report.dyadic_side);
  j["ratio"] = finite_or_tag(report.ratio);
  j["seminorm_ratio"] = report.seminorm_ratio ? finite_or_tag(*report.seminorm_ratio) : Json("exact-zero");
  j["integral"] = to_json(report.integral);
  j["dyadic"] = to_json(report.dyadic);

  Json diagnostics;
  if (report.decay.exact_zero) {
    diagnostics["decay_slope"] = "exact-zero";
  } else {
    diagnostics["decay_slope"] = finite_or_tag(report.decay.slope);
  }
  diagnostics["lemma_weights"] = {{"k", report.weights.k}, {"m", report.weights.m}};
  diagnostics["lemma_constant"] = finite_or_tag(report.lemma_constant);
  diagnostics["lemma_grows_with_refinement"] = report.lemma_grows;
  j["diagnostics"] = std::move(diagnostics);
  j["warnings"] = report.warnings;
  return j;
}

void write_bands_csv(std::ostream& out, const BandComponents& bands) {
  const std::size_t levels = bands.bands.size();
  for (std::size_t j = 0; j < levels; ++j) out << (j ? "," : "") << "band_" << j;
  out << '\n';
  if (levels == 0) return;
  out.precision(17);
  const Eigen::Index n = bands.bands.front().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < levels; ++j) out << (j ? "," : "") << bands.bands[j][i];
    out << '\n';
  }
}

void write_equivalence_csv(std::ostream& out, std::span<const EquivalenceReport> reports) {
  out << "label,alpha,q,r,signal_norm,integral_seminorm,integral_status,dyadic_term,integral_side,"
         "dyadic_side,ratio,decay_slope\n";
  out.precision(17);
  for (const auto& r : reports) {
    out << r.label << ',' << r.params.alpha << ',';
    if (r.params.q_infinite()) {
      out << "inf";
    } else {
      out << r.params.q;
    }
    out << ',' << r.params.order() << ',' << r.signal_norm << ',' << r.integral.value << ','
        << to_string(r.integral.status) << ',' << r.dyadic.term << ',' << r.integral_side << ','
        << r.dyadic_side << ',' << r.ratio << ',';
    if (r.decay.exact_zero) {
      out << "exact-zero";
    } else {
      out << r.decay.slope;
    }
    out << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + temp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw ConfigError("failed writing '" + temp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw ConfigError("cannot move report into place at '" + path.string() + "'");
  }
}

}  // namespace lpbesov
