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

#ifndef ERNET_COST_HPP_
#define ERNET_COST_HPP_

#include <cstdint>
#include <string>

#include "ernet/model.hpp"
#include "ernet/plan.hpp"
#include "ernet/rational.hpp"

namespace ernet {

enum class FlowKind { kRecompute, kReuse };

const char* flow_kind_name(FlowKind f);
FlowKind parse_flow_kind(const std::string& s);

// Per-frame write + read-back traffic of internal feature maps under the
// layer-by-layer schedule: every convolution output except the last, which
// encodes the output frame.  Requires a bound plan.  The whole-image flow
// reports exactly this value.
std::uint64_t internal_feature_bytes(const ExecPlan& p,
                                     int bytes_per_feature);

// internal_feature_bytes at the given input dimensions, times fps.
std::uint64_t dram_bandwidth_layerwise(const ModelSpec& m, int width,
                                       int height, int fps,
                                       int bytes_per_feature);

// Continuous-model recompute overhead for a stack of depth 3x3 layers fed
// s_in-wide input blocks: (2/3)·b·(3-4b)/(1-2b)^2 with b = depth/s_in.
// Throws std::domain_error once the pyramid collapses (2*depth >= s_in).
double recompute_overhead_closed(int depth, int s_in);

// Discrete counterpart: [sum_{k=1..D}(s-2k)^2 - D*(s-2D)^2] / [D*(s-2D)^2].
double recompute_overhead_exact(int depth, int s_in);
Rational recompute_overhead_exact_rational(int depth, int s_in);

// Reuse-flow cache size: per 3x3 convolution, two input rows across the
// layer width plus two input columns across the block height, so
// 2*(width_l + s_l)*in_channels summed over 3x3 layers, each term in that
// layer's own resolution.  s is in the output domain.
std::uint64_t line_buffer_bytes(const ModelSpec& m, int image_width, int s,
                                int bytes_per_feature);

// Line buffer per equivalent 3x3 layer for each block type at matched
// compute, normalized to the E3R1 module: (1, sqrt(R), (1+R)/2, R).
struct LbRatios {
  double e3r1 = 1.0;
  double conv3x3 = 1.0;
  double e3r3 = 1.0;
  double e1r3 = 1.0;
};
LbRatios normalized_lb_ratios(double r);

// MACs of one module per equivalent 3x3 layer, relative to a plain 3x3
// stack of matched width: 10/9 for the mixed-kernel modules, 1 for E3R3.
Rational compute_factor(Variant v);

// Three-operand on-chip buffer sized by the largest per-tile tensor at any
// layer boundary.  s is the output-domain block width; recompute tiles
// shrink with depth, reuse tiles are s^2 scaled per layer resolution.
std::uint64_t block_buffer_bytes(const ModelSpec& m, int s,
                                 int bytes_per_feature, FlowKind flow,
                                 int n_operands = 3);

// Aggregate analytic costs of one model against one hardware target.
struct CostReport {
  std::string model_name;
  FlowKind flow = FlowKind::kRecompute;
  std::string target_name;
  int out_width = 0, out_height = 0, fps = 0;
  int block_size_in = 0;   // input-domain block width
  int block_size_out = 0;  // same block in output pixels
  int bytes_per_feature = 1;

  std::uint64_t params = 0;
  Rational macs_per_pixel;  // per output pixel
  Rational required_macs_per_second;
  std::int64_t compute_budget = 0;
  std::uint64_t dram_bytes_per_second = 0;
  Rational recompute_overhead;  // 0 under reuse
  double beta = 0.0;            // halo / input block width
  int halo_in = 0;
  std::uint64_t tiles_per_frame = 0;
  std::uint64_t line_buffer_bytes = 0;  // 0 under recompute
  std::uint64_t line_buffer_limit = 0;  // 0 = no limit
  std::uint64_t block_buffer_bytes = 0;
  std::uint64_t weight_bytes_per_frame = 0;
  bool compute_exceeded = false;
  bool line_buffer_exceeded = false;
};

// Flat key-value rendering (one `key: value` line each; byte quantities
// also in decimal MB / GB per s).
std::string cost_report_text(const CostReport& r);

// One CSV row per report.
std::string cost_report_csv_header();
std::string cost_report_csv_row(const CostReport& r);

}  // namespace ernet

#endif  // ERNET_COST_HPP_
