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

#include "ernet/scan.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ernet/plan.hpp"
#include "ernet/util.hpp"
#include "json.hpp"

namespace ernet {
namespace {

constexpr std::int64_t kGenericBudget = 20000000000000;  // 2e13 MACs/s

std::int64_t ceil_div_i64(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

std::string fmt_mb(std::uint64_t bytes) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%llu (%.1f MB)",
                static_cast<unsigned long long>(bytes), bytes / 1e6);
  return buf;
}

void require_target_geometry(const ModelSpec& m, const HardwareTarget& t) {
  ERNET_REQUIRE(t.out_width > 0 && t.out_height > 0 && t.fps > 0,
                "target: output size and frame rate must be positive");
  ERNET_REQUIRE(t.block_size >= 1, "target: block size must be positive");
  ERNET_REQUIRE(t.bytes_per_feature >= 1,
                "target: bytes per feature must be positive");
  ERNET_REQUIRE(t.out_width % m.scale == 0 && t.out_height % m.scale == 0,
                "target: output size is not divisible by the model scale");
}

std::uint64_t conv_kernel_area(const ExecLayer& e) {
  if (e.kind == ExecKind::kConv3x3) return 9;
  if (e.kind == ExecKind::kConv1x1) return 1;
  return 0;
}

// Exact MACs of one frame cut into a grid of t_out x t_out output tiles
// (edge tiles clipped), each recomputing its full halo.  A tile's demand at
// every layer is an x-interval that depends only on the tile column crossed
// with a y-interval that depends only on the tile row, so the grid total per
// layer factors into (sum of widths over columns) * (sum of heights over
// rows); one demand walk per strip instead of one per tile.
std::uint64_t grid_macs_per_frame(const ExecPlan& p, int t_out) {
  const int n_layers = static_cast<int>(p.layers.size());
  std::vector<std::uint64_t> sw(n_layers, 0), sh(n_layers, 0);
  for (int x = 0; x < p.out_w; x += t_out) {
    const Region strip{0, x, p.out_h, std::min(x + t_out, p.out_w)};
    const TileDemand d = backward_regions(p, strip, true);
    for (int l = 0; l < n_layers; ++l) sw[l] += d.out[l].width();
  }
  for (int y = 0; y < p.out_h; y += t_out) {
    const Region strip{y, 0, std::min(y + t_out, p.out_h), p.out_w};
    const TileDemand d = backward_regions(p, strip, true);
    for (int l = 0; l < n_layers; ++l) sh[l] += d.out[l].height();
  }
  std::uint64_t total = 0;
  for (int l = 0; l < n_layers; ++l) {
    const ExecLayer& e = p.layers[l];
    const std::uint64_t ka = conv_kernel_area(e);
    if (ka == 0) continue;
    total += sw[l] * sh[l] * ka * e.in_channels * e.out_channels;
  }
  return total;
}

std::uint64_t whole_frame_macs(const ExecPlan& p) {
  const Region full{0, 0, p.out_h, p.out_w};
  return tile_conv_macs(p, backward_regions(p, full, true));
}

ChainCfg chain_cfg(Variant v, int b, std::int64_t sigma) {
  ChainCfg cfg;
  cfg.variant = v;
  cfg.count = b;
  cfg.base_ratio = static_cast<int>(sigma / b);
  cfg.boosted = static_cast<int>(sigma % b);
  return cfg;
}

int count_3x3(const ModelSpec& m) {
  int n = 0;
  for (const LayerSpec& l : m.layers)
    if (l.kind == LayerKind::kConv3x3) ++n;
  return n;
}

ScanRow row_from(const ModelSpec& m, const HardwareTarget& t,
                 const Feasibility& f, int b, std::int64_t sigma) {
  ScanRow r;
  r.b = b;
  r.r_i = static_cast<int>(sigma / b);
  r.n = static_cast<int>(sigma % b);
  r.r_e = effective_expansion_ratio(b, r.r_i, r.n);
  r.macs_per_pixel = macs_per_output_pixel(m);
  r.required_macs_per_second = f.required_macs_per_second;
  r.line_buffer_bytes = f.line_buffer_bytes;
  r.feasible = f.feasible;
  r.binding_constraint = f.binding;
  r.depth_3x3 = count_3x3(m);
  r.note = f.note;
  if (t.flow == FlowKind::kReuse) {
    r.block_buffer_bytes = block_buffer_bytes(m, t.block_size * m.scale,
                                              t.bytes_per_feature, t.flow);
  } else {
    const ExecPlan p = build_plan(m);
    const int t_out = (t.block_size - 2 * p.halo_in) * m.scale;
    if (t_out > 0)
      r.block_buffer_bytes =
          block_buffer_bytes(m, t_out, t.bytes_per_feature, t.flow);
  }
  return r;
}

// Maximum feasible sigma = B*R_I + N for one module count, or the
// infeasible minimum-ratio row when even sigma = B does not fit.
ScanRow scan_one_b(Family family, Variant variant, const HardwareTarget& t,
                   int b, int r_max) {
  const std::int64_t lo = b;
  const std::int64_t hi = static_cast<std::int64_t>(b) * (r_max + 1) - 1;

  auto build = [&](std::int64_t sigma) {
    return build_family_model(family, chain_cfg(variant, b, sigma));
  };

  std::int64_t found = -1;
  if (t.flow == FlowKind::kReuse) {
    // Both the MAC rate and the line buffer are exactly linear in sigma
    // (each ratio step adds one fixed-size expand/reduce slab to one
    // module), so two reference builds calibrate the whole frontier and
    // each candidate costs O(1).  The emitted row is re-validated against
    // the fully built model below.
    const ModelSpec m1 = build(lo), m2 = build(2 * b);
    require_target_geometry(m1, t);
    const int in_w = t.out_width / m1.scale;
    const int s_out = t.block_size * m1.scale;
    const Rational mpp1 = macs_per_output_pixel(m1);
    const Rational mpp_step =
        (macs_per_output_pixel(m2) - mpp1) / Rational(b);
    const std::uint64_t lb1 =
        line_buffer_bytes(m1, in_w, s_out, t.bytes_per_feature);
    const std::uint64_t lb2 =
        line_buffer_bytes(m2, in_w, s_out, t.bytes_per_feature);
    if (lb2 < lb1 || (lb2 - lb1) % static_cast<std::uint64_t>(b) != 0)
      throw std::logic_error(
          "scan: line buffer is not linear over the calibration pair");
    const std::uint64_t lb_step = (lb2 - lb1) / b;
    const Rational px_fps(static_cast<std::int64_t>(t.out_width) *
                          t.out_height * t.fps);
    auto feasible_at = [&](std::int64_t sigma) {
      const Rational req = (mpp1 + mpp_step * Rational(sigma - lo)) * px_fps;
      if (req > Rational(t.compute_budget)) return false;
      const std::uint64_t lbv = lb1 + lb_step * (sigma - lo);
      return !t.has_line_buffer_limit || lbv <= t.line_buffer_limit;
    };
    for (std::int64_t s = hi; s >= lo; --s)
      if (feasible_at(s)) {
        found = s;
        break;
      }
  } else {
    for (std::int64_t s = hi; s >= lo; --s)
      if (check_feasible(build(s), t).feasible) {
        found = s;
        break;
      }
  }

  if (found < 0) {
    const ModelSpec m = build(lo);
    const Feasibility f = check_feasible(m, t);
    if (f.feasible)
      throw std::logic_error("scan: frontier search missed a feasible point");
    return row_from(m, t, f, b, lo);
  }

  const ModelSpec m = build(found);
  const Feasibility f = check_feasible(m, t);
  if (!f.feasible)
    throw std::logic_error(
        "scan: calibrated frontier disagrees with the full evaluation");
  ScanRow row = row_from(m, t, f, b, found);
  if (found == hi) {
    // Capped by the scanned ratio range, not by the target.
    row.binding_constraint = "none";
  } else {
    const Feasibility next = check_feasible(build(found + 1), t);
    if (next.feasible)
      throw std::logic_error("scan: frontier point is not maximal");
    row.binding_constraint = next.binding;
  }
  return row;
}

}  // namespace

HardwareTarget preset_target(const std::string& name) {
  HardwareTarget t;
  t.name = name;
  t.block_size = 128;
  t.bytes_per_feature = 1;
  if (name == "A") {
    t.out_width = 1920;
    t.out_height = 1080;
    t.fps = 30;
    t.compute_budget = kGenericBudget;
    t.flow = FlowKind::kRecompute;
  } else if (name == "B") {
    t.out_width = 3840;
    t.out_height = 2160;
    t.fps = 30;
    t.compute_budget = kGenericBudget;
    t.flow = FlowKind::kRecompute;
  } else if (name == "C") {
    t.out_width = 1920;
    t.out_height = 1080;
    t.fps = 40;
    t.compute_budget = 19890634752000;  // B28R3N9 denoiser lands exactly here
    t.line_buffer_limit = 4000000;
    t.has_line_buffer_limit = true;
    t.flow = FlowKind::kReuse;
  } else if (name == "E") {
    t.out_width = 1920;
    t.out_height = 1080;
    t.fps = 60;
    t.compute_budget = 18181407744000;  // B61R3N25 x4 SR lands exactly here
    t.line_buffer_limit = 4800000;
    t.has_line_buffer_limit = true;
    t.flow = FlowKind::kReuse;
  } else {
    throw std::invalid_argument("unknown preset target: " + name +
                                " (available: A, B, C, E)");
  }
  return t;
}

std::string target_text(const HardwareTarget& t) {
  std::ostringstream o;
  o << "target: " << t.name << "\n";
  o << "output: " << t.out_width << "x" << t.out_height << " @ " << t.fps
    << " fps\n";
  o << "flow: " << flow_kind_name(t.flow) << "\n";
  o << "compute_budget: " << t.compute_budget << " MACs/s\n";
  o << "line_buffer_limit: "
    << (t.has_line_buffer_limit ? fmt_mb(t.line_buffer_limit) : "none")
    << "\n";
  o << "block_size: " << t.block_size << "\n";
  o << "bytes_per_feature: " << t.bytes_per_feature << "\n";
  return o.str();
}

HardwareTarget load_target(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open target file: " + path);
  HardwareTarget t;
  try {
    nlohmann::json j;
    in >> j;
    t.name = j.value("name", std::string("custom"));
    t.out_width = j.at("out_width").get<int>();
    t.out_height = j.at("out_height").get<int>();
    t.fps = j.at("fps").get<int>();
    t.compute_budget = j.at("compute_budget").get<std::int64_t>();
    if (j.contains("line_buffer_limit") && !j["line_buffer_limit"].is_null()) {
      t.line_buffer_limit = j["line_buffer_limit"].get<std::uint64_t>();
      t.has_line_buffer_limit = true;
    }
    t.block_size = j.value("block_size", 128);
    t.bytes_per_feature = j.value("bytes_per_feature", 1);
    t.flow = parse_flow_kind(j.value("flow", std::string("recompute")));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad target file " + path + ": " + e.what());
  }
  return t;
}

void save_target(const HardwareTarget& t, const std::string& path) {
  nlohmann::ordered_json j;
  j["name"] = t.name;
  j["out_width"] = t.out_width;
  j["out_height"] = t.out_height;
  j["fps"] = t.fps;
  j["compute_budget"] = t.compute_budget;
  if (t.has_line_buffer_limit) j["line_buffer_limit"] = t.line_buffer_limit;
  j["block_size"] = t.block_size;
  j["bytes_per_feature"] = t.bytes_per_feature;
  j["flow"] = flow_kind_name(t.flow);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write target file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write target file: " + path);
}

Feasibility check_feasible(const ModelSpec& m, const HardwareTarget& t) {
  validate_model(m);
  require_target_geometry(m, t);
  const int in_w = t.out_width / m.scale;
  const int in_h = t.out_height / m.scale;

  Feasibility f;
  if (t.flow == FlowKind::kReuse) {
    // Nothing is recomputed: the rate is the whole-image count.
    const Rational px_fps(static_cast<std::int64_t>(t.out_width) *
                          t.out_height * t.fps);
    f.required_macs_per_second = macs_per_output_pixel(m) * px_fps;
    f.line_buffer_bytes = line_buffer_bytes(m, in_w, t.block_size * m.scale,
                                            t.bytes_per_feature);
    const bool compute_ok =
        !(f.required_macs_per_second > Rational(t.compute_budget));
    const bool lb_ok = !t.has_line_buffer_limit ||
                       f.line_buffer_bytes <= t.line_buffer_limit;
    f.feasible = compute_ok && lb_ok;
    f.binding = !compute_ok ? "compute" : (!lb_ok ? "line_buffer" : "none");
    return f;
  }

  ExecPlan p = build_plan(m);
  const int t_out = (t.block_size - 2 * p.halo_in) * m.scale;
  if (t_out <= 0) {
    // The receptive field swallows the whole block: no tile yields output.
    f.feasible = false;
    f.binding = "compute";
    f.note = "pyramid collapses: block_size <= 2 * halo (" +
             std::to_string(t.block_size) + " <= " +
             std::to_string(2 * p.halo_in) + ")";
    return f;
  }
  ERNET_REQUIRE(t_out % p.divisor == 0,
                "target: usable tile width is not a multiple of the model "
                "resolution divisor");
  bind_image(p, in_h, in_w);
  const std::uint64_t frame = grid_macs_per_frame(p, t_out);
  f.required_macs_per_second =
      Rational(static_cast<std::int64_t>(frame)) * Rational(t.fps);
  f.feasible = !(f.required_macs_per_second > Rational(t.compute_budget));
  f.binding = f.feasible ? "none" : "compute";
  return f;
}

const char* family_name(Family f) {
  return f == Family::kDnERNet ? "dnernet" : "sr4ernet";
}

Family parse_family(const std::string& s) {
  if (s == "dnernet") return Family::kDnERNet;
  if (s == "sr4ernet") return Family::kSR4ERNet;
  throw std::invalid_argument("unknown scan family: " + s +
                              " (available: dnernet, sr4ernet)");
}

ModelSpec build_family_model(Family f, const ChainCfg& cfg) {
  return f == Family::kDnERNet ? build_dnernet(cfg, 3) : build_sr4ernet(cfg);
}

std::vector<ScanRow> scan(Family family, Variant variant,
                          const HardwareTarget& t, int b_min, int b_max,
                          int r_max) {
  ERNET_REQUIRE(b_min >= 1 && b_max >= b_min,
                "scan: module count range must satisfy 1 <= b_min <= b_max");
  ERNET_REQUIRE(r_max >= 1, "scan: r_max must be at least 1");
  std::vector<ScanRow> rows;
  rows.reserve(b_max - b_min + 1);
  for (int b = b_min; b <= b_max; ++b)
    rows.push_back(scan_one_b(family, variant, t, b, r_max));
  return rows;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream o;
  o << "B,R_I,N,R_E,macs_per_pixel,required_macs_s,line_buffer_bytes,"
       "block_buffer_bytes,feasible,binding_constraint\n";
  for (const ScanRow& r : rows) {
    o << r.b << ',' << r.r_i << ',' << r.n << ',' << r.r_e.str() << ','
      << r.macs_per_pixel.str() << ',' << r.required_macs_per_second.str()
      << ',' << r.line_buffer_bytes << ',' << r.block_buffer_bytes << ','
      << (r.feasible ? 1 : 0) << ',' << r.binding_constraint << '\n';
  }
  return o.str();
}

std::string scan_text(const std::vector<ScanRow>& rows,
                      const HardwareTarget& t) {
  std::ostringstream o;
  o << target_text(t) << "\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%4s %4s %4s %8s %6s %14s %18s %13s %13s %9s %s\n",
                "B", "R_I", "N", "R_E", "d3x3", "macs/px",
                "required_macs/s", "line_buf_B", "block_buf_B", "feasible",
                "binding");
  o << buf;
  for (const ScanRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%4d %4d %4d %8.3f %6d %14.1f %18.3e %13llu %13llu %9s %s",
                  r.b, r.r_i, r.n, r.r_e.to_double(), r.depth_3x3,
                  r.macs_per_pixel.to_double(),
                  r.required_macs_per_second.to_double(),
                  static_cast<unsigned long long>(r.line_buffer_bytes),
                  static_cast<unsigned long long>(r.block_buffer_bytes),
                  r.feasible ? "yes" : "no", r.binding_constraint.c_str());
    o << buf;
    if (!r.note.empty()) o << "  [" << r.note << "]";
    o << "\n";
  }
  return o.str();
}

CostReport make_cost_report(const ModelSpec& m, const HardwareTarget& t) {
  validate_model(m);
  require_target_geometry(m, t);
  const int in_w = t.out_width / m.scale;
  const int in_h = t.out_height / m.scale;

  CostReport r;
  r.model_name = m.name;
  r.flow = t.flow;
  r.target_name = t.name;
  r.out_width = t.out_width;
  r.out_height = t.out_height;
  r.fps = t.fps;
  r.block_size_in = t.block_size;
  r.block_size_out = t.block_size * m.scale;
  r.bytes_per_feature = t.bytes_per_feature;
  r.params = param_count(m);
  r.macs_per_pixel = macs_per_output_pixel(m);
  r.compute_budget = t.compute_budget;
  r.dram_bytes_per_second =
      dram_bandwidth_layerwise(m, in_w, in_h, t.fps, t.bytes_per_feature);
  r.line_buffer_limit = t.has_line_buffer_limit ? t.line_buffer_limit : 0;

  ExecPlan p = build_plan(m);
  r.halo_in = p.halo_in;
  r.beta = static_cast<double>(p.halo_in) / t.block_size;

  const Feasibility f = check_feasible(m, t);
  r.required_macs_per_second = f.required_macs_per_second;

  if (t.flow == FlowKind::kRecompute) {
    const int t_out = (t.block_size - 2 * p.halo_in) * m.scale;
    ERNET_REQUIRE(t_out > 0,
                  "cost report: pyramid collapses at this block size");
    bind_image(p, in_h, in_w);
    r.tiles_per_frame =
        static_cast<std::uint64_t>(ceil_div_i64(p.out_w, t_out)) *
        ceil_div_i64(p.out_h, t_out);
    const std::uint64_t frame = grid_macs_per_frame(p, t_out);
    const std::uint64_t whole = whole_frame_macs(p);
    r.recompute_overhead =
        Rational(static_cast<std::int64_t>(frame - whole)) /
        Rational(static_cast<std::int64_t>(whole));
    r.block_buffer_bytes =
        block_buffer_bytes(m, t_out, t.bytes_per_feature, t.flow);
    r.weight_bytes_per_frame =
        r.params * t.bytes_per_feature * r.tiles_per_frame;
  } else {
    r.recompute_overhead = Rational(0);
    r.tiles_per_frame =
        static_cast<std::uint64_t>(
            ceil_div_i64(t.out_width, r.block_size_out)) *
        ceil_div_i64(t.out_height, r.block_size_out);
    r.line_buffer_bytes = f.line_buffer_bytes;
    r.block_buffer_bytes =
        block_buffer_bytes(m, r.block_size_out, t.bytes_per_feature, t.flow);
    // Weights stay resident across blocks: one load per frame.
    r.weight_bytes_per_frame = r.params * t.bytes_per_feature;
  }
  r.compute_exceeded =
      r.required_macs_per_second > Rational(t.compute_budget);
  r.line_buffer_exceeded = t.has_line_buffer_limit &&
                           r.line_buffer_bytes > t.line_buffer_limit;
  return r;
}

}  // namespace ernet
