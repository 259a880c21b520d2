// Copyright 2026 The ernet-kit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ernet/cost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ernet/util.hpp"

namespace ernet {
namespace {

bool is_conv(ExecKind k) {
  return k == ExecKind::kConv3x3 || k == ExecKind::kConv1x1;
}

// v * r, required to be integral.
std::int64_t scaled_exact(std::int64_t v, const Rational& r,
                          const char* what) {
  const std::int64_t n = v * r.num;
  ERNET_REQUIRE(n % r.den == 0, what);
  return n / r.den;
}

std::string format_mb(std::uint64_t bytes) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%llu (%.1f MB)",
                static_cast<unsigned long long>(bytes), bytes / 1e6);
  return buf;
}

}  // namespace

const char* flow_kind_name(FlowKind f) {
  return f == FlowKind::kRecompute ? "recompute" : "reuse";
}

FlowKind parse_flow_kind(const std::string& s) {
  if (s == "recompute") return FlowKind::kRecompute;
  if (s == "reuse") return FlowKind::kReuse;
  throw std::invalid_argument("unknown flow kind: " + s);
}

std::uint64_t internal_feature_bytes(const ExecPlan& p,
                                     int bytes_per_feature) {
  ERNET_REQUIRE(p.bound(), "internal_feature_bytes: unbound plan");
  ERNET_REQUIRE(bytes_per_feature >= 1, "bytes_per_feature < 1");
  int last_conv = -1;
  for (int i = 0; i < static_cast<int>(p.layers.size()); ++i)
    if (is_conv(p.layers[i].kind)) last_conv = i;
  std::uint64_t bytes = 0;
  for (int i = 0; i < static_cast<int>(p.layers.size()); ++i) {
    const ExecLayer& e = p.layers[i];
    if (!is_conv(e.kind) || i == last_conv) continue;
    bytes += static_cast<std::uint64_t>(e.out_h) * e.out_w * e.out_channels *
             2 * bytes_per_feature;
  }
  return bytes;
}

std::uint64_t dram_bandwidth_layerwise(const ModelSpec& m, int width,
                                       int height, int fps,
                                       int bytes_per_feature) {
  ERNET_REQUIRE(fps >= 0, "dram_bandwidth_layerwise: negative fps");
  ExecPlan p = build_plan(m);
  bind_image(p, height, width);
  return internal_feature_bytes(p, bytes_per_feature) *
         static_cast<std::uint64_t>(fps);
}

double recompute_overhead_closed(int depth, int s_in) {
  ERNET_REQUIRE(depth >= 0 && s_in >= 1, "recompute_overhead_closed: domain");
  if (depth == 0) return 0.0;
  if (2 * depth >= s_in)
    throw std::domain_error(
        "recompute_overhead_closed: pyramid collapses (2*depth >= s_in)");
  const double b = static_cast<double>(depth) / s_in;
  return (2.0 / 3.0) * b * (3.0 - 4.0 * b) / ((1.0 - 2.0 * b) * (1.0 - 2.0 * b));
}

Rational recompute_overhead_exact_rational(int depth, int s_in) {
  ERNET_REQUIRE(depth >= 0 && s_in >= 1, "recompute_overhead_exact: domain");
  if (depth == 0) return Rational(0);
  if (2 * depth >= s_in)
    throw std::domain_error(
        "recompute_overhead_exact: pyramid collapses (2*depth >= s_in)");
  std::int64_t sum = 0;
  for (int k = 1; k <= depth; ++k) {
    const std::int64_t side = s_in - 2 * k;
    sum += side * side;
  }
  const std::int64_t side = s_in - 2 * depth;
  const std::int64_t base = static_cast<std::int64_t>(depth) * side * side;
  return Rational(sum - base, base);
}

double recompute_overhead_exact(int depth, int s_in) {
  const Rational r = recompute_overhead_exact_rational(depth, s_in);
  return r.to_double();
}

std::uint64_t line_buffer_bytes(const ModelSpec& m, int image_width, int s,
                                int bytes_per_feature) {
  ERNET_REQUIRE(image_width >= 1 && s >= 0 && bytes_per_feature >= 1,
                "line_buffer_bytes: domain");
  const ExecPlan p = build_plan(m);
  const Rational s_out(m.scale);
  std::uint64_t bytes = 0;
  for (const ExecLayer& e : p.layers) {
    if (e.kind != ExecKind::kConv3x3) continue;
    // A convolution preserves resolution, so its input scale is e.scale.
    const std::int64_t w = scaled_exact(
        image_width, e.scale, "line_buffer_bytes: fractional layer width");
    const std::int64_t sl = scaled_exact(
        s, e.scale / s_out, "line_buffer_bytes: fractional layer block size");
    bytes += static_cast<std::uint64_t>(2) * (w + sl) * e.in_channels *
             bytes_per_feature;
  }
  return bytes;
}

LbRatios normalized_lb_ratios(double r) {
  if (!(r >= 1.0))
    throw std::invalid_argument("normalized_lb_ratios: R must be >= 1");
  LbRatios out;
  out.e3r1 = 1.0;
  out.conv3x3 = std::sqrt(r);
  out.e3r3 = (1.0 + r) / 2.0;
  out.e1r3 = r;
  return out;
}

Rational compute_factor(Variant v) {
  switch (v) {
    case Variant::kE3R1:
    case Variant::kE1R3:
      return Rational(10, 9);
    case Variant::kE3R3:
      return Rational(1);
  }
  throw std::logic_error("compute_factor: unknown variant");
}

std::uint64_t block_buffer_bytes(const ModelSpec& m, int s,
                                 int bytes_per_feature, FlowKind flow,
                                 int n_operands) {
  ERNET_REQUIRE(s >= 1 && bytes_per_feature >= 1 && n_operands >= 1,
                "block_buffer_bytes: domain");
  const ExecPlan p = build_plan(m);
  ERNET_REQUIRE(s % p.divisor == 0,
                "block_buffer_bytes: block size incompatible with the "
                "model's resolution divisor");
  const Rational s_out(m.scale);
  std::uint64_t max_pxch = 0;
  if (flow == FlowKind::kRecompute) {
    const int k = 4096 * p.divisor;
    const TileDemand d =
        backward_regions(p, Region{k, k, k + s, k + s}, false);
    max_pxch = static_cast<std::uint64_t>(d.input.area()) * m.input_channels;
    for (std::size_t i = 0; i < p.layers.size(); ++i)
      max_pxch = std::max(max_pxch,
                          static_cast<std::uint64_t>(d.out[i].area()) *
                              p.layers[i].out_channels);
  } else {
    const std::int64_t s_in = scaled_exact(
        s, Rational(1) / s_out, "block_buffer_bytes: fractional input block");
    max_pxch = static_cast<std::uint64_t>(s_in) * s_in * m.input_channels;
    for (const ExecLayer& e : p.layers) {
      const std::int64_t sl = scaled_exact(
          s, e.scale / s_out, "block_buffer_bytes: fractional layer block");
      max_pxch = std::max(max_pxch, static_cast<std::uint64_t>(sl) * sl *
                                        e.out_channels);
    }
  }
  return max_pxch * n_operands * bytes_per_feature;
}

std::string cost_report_text(const CostReport& r) {
  std::ostringstream o;
  char buf[96];
  o << "model: " << r.model_name << "\n";
  o << "target: " << r.target_name << "\n";
  o << "flow: " << flow_kind_name(r.flow) << "\n";
  o << "output: " << r.out_width << "x" << r.out_height << " @ " << r.fps
    << " fps\n";
  o << "block_size_input: " << r.block_size_in << "\n";
  o << "block_size_output: " << r.block_size_out << "\n";
  o << "bytes_per_feature: " << r.bytes_per_feature << "\n";
  o << "params: " << r.params << "\n";
  o << "macs_per_pixel: " << r.macs_per_pixel.str() << "\n";
  o << "required_macs_per_second: " << r.required_macs_per_second.str()
    << "\n";
  o << "compute_budget_macs_per_second: " << r.compute_budget << "\n";
  std::snprintf(buf, sizeof buf, "%llu (%.1f GB/s)",
                static_cast<unsigned long long>(r.dram_bytes_per_second),
                r.dram_bytes_per_second / 1e9);
  o << "dram_bytes_per_second: " << buf << "\n";
  o << "recompute_overhead_ratio: " << r.recompute_overhead.str();
  std::snprintf(buf, sizeof buf, " (%.4f)", r.recompute_overhead.to_double());
  o << buf << "\n";
  // The closed-form overhead model uses the INPUT block width; beta is
  // halo-per-side over that width.
  std::snprintf(buf, sizeof buf, "%.4f", r.beta);
  o << "beta: " << buf << "\n";
  o << "halo_input_px: " << r.halo_in << "\n";
  o << "tiles_per_frame: " << r.tiles_per_frame << "\n";
  o << "line_buffer_bytes: " << format_mb(r.line_buffer_bytes) << "\n";
  o << "line_buffer_limit: "
    << (r.line_buffer_limit ? format_mb(r.line_buffer_limit)
                            : std::string("none"))
    << "\n";
  o << "block_buffer_bytes: " << format_mb(r.block_buffer_bytes) << "\n";
  o << "weight_bytes_per_frame: " << format_mb(r.weight_bytes_per_frame)
    << "\n";
  o << "compute_exceeded: " << (r.compute_exceeded ? "yes" : "no") << "\n";
  o << "line_buffer_exceeded: " << (r.line_buffer_exceeded ? "yes" : "no")
    << "\n";
  return o.str();
}

std::string cost_report_csv_header() {
  return "model,target,flow,params,macs_per_pixel,required_macs_s,"
         "compute_budget,dram_bytes_s,recompute_overhead,line_buffer_bytes,"
         "block_buffer_bytes,weight_bytes_frame,compute_exceeded,"
         "line_buffer_exceeded\n";
}

std::string cost_report_csv_row(const CostReport& r) {
  std::ostringstream o;
  o << r.model_name << "," << r.target_name << "," << flow_kind_name(r.flow)
    << "," << r.params << "," << r.macs_per_pixel.str() << ","
    << r.required_macs_per_second.str() << "," << r.compute_budget << ","
    << r.dram_bytes_per_second << "," << r.recompute_overhead.str() << ","
    << r.line_buffer_bytes << "," << r.block_buffer_bytes << ","
    << r.weight_bytes_per_frame << "," << (r.compute_exceeded ? 1 : 0) << ","
    << (r.line_buffer_exceeded ? 1 : 0) << "\n";
  return o.str();
}

}  // namespace ernet
