// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/diagnostics/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "pllab/errors.hpp"

namespace pllab {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

nlohmann::json histogram_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

}  // namespace

nlohmann::json diagnostics_json(const NormStats* norms, const SimilarityStats* similarity,
                                const LengthStats* lengths) {
  using nlohmann::json;
  json j = json::object();
  if (norms) {
    j["norms"] = norms->norms;
    j["histogram"] = histogram_json(norms->histogram);
    j["median"] = norms->median;
    j["max_over_median"] = finite_or_null(norms->max_over_median);
    j["dominant_k"] = norms->dominant_k;
    j["dominant_count"] = norms->dominant_count;
  } else {
    for (const char* k : {"norms", "histogram", "median", "max_over_median", "dominant_k", "dominant_count"}) j[k] = nullptr;
  }
  if (similarity) {
    j["mean_spatial"] = optional_json(similarity->mean_spatial);
    j["mean_temporal"] = optional_json(similarity->mean_temporal);
    j["spatial_pairs"] = similarity->spatial.size();
    j["temporal_pairs"] = similarity->temporal.size();
  } else {
    for (const char* k : {"mean_spatial", "mean_temporal", "spatial_pairs", "temporal_pairs"}) j[k] = nullptr;
  }
  if (lengths) {
    j["lengths"] = lengths->lengths;
    j["length_mean"] = lengths->mean;
    j["length_median"] = lengths->median;
    j["length_histogram"] = histogram_json(lengths->histogram);
  } else {
    for (const char* k : {"lengths", "length_mean", "length_median", "length_histogram"}) j[k] = nullptr;
  }
  return j;
}

}  // namespace pllab
