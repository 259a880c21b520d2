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

#ifndef ERNET_SCAN_HPP_
#define ERNET_SCAN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ernet/cost.hpp"
#include "ernet/model.hpp"
#include "ernet/rational.hpp"

namespace ernet {

// Deployment point a model is scanned against.  block_size is the INPUT
// block width: the recompute pyramid shrinks it by twice the input halo,
// the reuse flow streams it through unchanged (output block = block * scale).
struct HardwareTarget {
  std::string name;
  int out_width = 0, out_height = 0;
  int fps = 0;
  std::int64_t compute_budget = 0;       // MACs per second
  std::uint64_t line_buffer_limit = 0;   // meaningful when has_line_buffer_limit
  bool has_line_buffer_limit = false;
  int block_size = 0;
  int bytes_per_feature = 1;
  FlowKind flow = FlowKind::kRecompute;
};

// Built-in targets.  A/B: Full HD / 4K UHD 30 fps video under the recompute
// flow.  C: Full HD 40 fps denoising, reuse flow, 4.0 MB line-buffer limit.
// E: x4 super-resolution to Full HD at 60 fps, reuse flow, 4.8 MB limit.
// Compute budgets for C and E are calibrated so the reference
// configurations B28R3N9 (denoise) and B61R3N25 (SR) sit exactly on the
// feasibility frontier; A and B use a generic 2e13 MACs/s capability.
HardwareTarget preset_target(const std::string& name);

std::string target_text(const HardwareTarget& t);
HardwareTarget load_target(const std::string& path);   // JSON
void save_target(const HardwareTarget& t, const std::string& path);

struct Feasibility {
  bool feasible = false;
  std::string binding;  // "compute", "line_buffer" or "none"
  std::string note;     // set when the pyramid collapses
  Rational required_macs_per_second;
  std::uint64_t line_buffer_bytes = 0;  // 0 under recompute
};

// Compute rate (and, under reuse, line-buffer demand) of running m at the
// target, against its budget.  Recompute rates come from exact per-tile MAC
// counts summed over the frame's tile grid; reuse rates are the whole-image
// count (nothing is recomputed).
Feasibility check_feasible(const ModelSpec& m, const HardwareTarget& t);

// Scannable model families (module chains wrapped in fixed heads/tails).
enum class Family { kDnERNet, kSR4ERNet };

const char* family_name(Family f);
Family parse_family(const std::string& s);
ModelSpec build_family_model(Family f, const ChainCfg& cfg);

struct ScanRow {
  int b = 0, r_i = 0, n = 0;
  Rational r_e;
  Rational macs_per_pixel;
  Rational required_macs_per_second;
  std::uint64_t line_buffer_bytes = 0;
  std::uint64_t block_buffer_bytes = 0;
  bool feasible = false;
  std::string binding_constraint;  // infeasible: first violated constraint;
                                   // feasible: what blocks the next step up
  int depth_3x3 = 0;               // 3x3 layers in the built model
  std::string note;
};

// For every B in [b_min, b_max], the maximum feasible effective expansion
// ratio R_E = R_I + N/B with R_I in [1, r_max], N in [0, B).  Cost is
// strictly increasing in B*R_I+N for every variant, so the first feasible
// candidate in descending order is the maximum; each emitted feasible row
// is re-validated through check_feasible on the fully built model.
std::vector<ScanRow> scan(Family family, Variant variant,
                          const HardwareTarget& t, int b_min, int b_max,
                          int r_max);

std::string scan_csv(const std::vector<ScanRow>& rows);
std::string scan_text(const std::vector<ScanRow>& rows,
                      const HardwareTarget& t);

// Full analytic cost sheet of one model at one target.
CostReport make_cost_report(const ModelSpec& m, const HardwareTarget& t);

}  // namespace ernet

#endif  // ERNET_SCAN_HPP_
