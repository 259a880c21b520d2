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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ernet/blob.hpp"
#include "ernet/cost.hpp"
#include "ernet/flows.hpp"
#include "ernet/image_io.hpp"
#include "ernet/model.hpp"
#include "ernet/plan.hpp"
#include "ernet/scan.hpp"
#include "ernet/util.hpp"

namespace {

using namespace ernet;

constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitIo = 3;

// ---------------------------------------------------------------- model args

struct ModelArgs {
  std::string family;
  std::string chain;
  int depth = 0;  // 0 keeps the family default
  int width = 0;
  int channels = 0;
  int resblocks = 0;
  std::string model_path;
  std::string weights_path;
};

void add_model_flags(CLI::App* cmd, ModelArgs& a) {
  cmd->add_option("--family", a.family,
                  "dnernet, sr4ernet, ffdnet-star, edsr-baseline or plain");
  cmd->add_option("--chain", a.chain,
                  "module chain name, e.g. E3R1-B28R3N9 (dnernet/sr4ernet)");
  cmd->add_option("--depth", a.depth, "3x3 layer count (ffdnet-star, plain)");
  cmd->add_option("--width", a.width, "feature channels");
  cmd->add_option("--channels", a.channels, "image channels");
  cmd->add_option("--resblocks", a.resblocks,
                  "residual block count (edsr-baseline)");
  cmd->add_option("--model", a.model_path,
                  "model description JSON instead of --family");
  cmd->add_option("--weights", a.weights_path,
                  "weight blob; omitted weights are drawn from --seed");
}

ModelSpec resolve_model(const ModelArgs& a, std::uint64_t seed) {
  ModelSpec m;
  if (!a.model_path.empty()) {
    m = load_model_json(a.model_path);
  } else if (a.family == "dnernet" || a.family == "sr4ernet") {
    if (a.chain.empty())
      throw std::invalid_argument("--chain is required for --family " +
                                  a.family);
    ChainCfg cfg = parse_chain_name(a.chain);
    if (a.width > 0) cfg.width = a.width;
    m = a.family == "dnernet"
            ? build_dnernet(cfg, a.channels > 0 ? a.channels : 3)
            : build_sr4ernet(cfg);
  } else if (a.family == "ffdnet-star") {
    m = build_ffdnet_star(a.depth > 0 ? a.depth : 12,
                          a.width > 0 ? a.width : 96,
                          a.channels > 0 ? a.channels : 3);
  } else if (a.family == "edsr-baseline") {
    m = build_edsr_baseline(a.resblocks > 0 ? a.resblocks : 16,
                            a.width > 0 ? a.width : 64);
  } else if (a.family == "plain") {
    if (a.depth <= 0)
      throw std::invalid_argument("--depth is required for --family plain");
    m = build_plain(a.depth, a.width > 0 ? a.width : 64,
                    a.channels > 0 ? a.channels : 1);
  } else if (a.family.empty()) {
    throw std::invalid_argument("pass --family or --model");
  } else {
    throw std::invalid_argument(
        "unknown family: " + a.family +
        " (available: dnernet, sr4ernet, ffdnet-star, edsr-baseline, plain)");
  }
  if (!a.weights_path.empty())
    load_weights(m, a.weights_path);
  else
    init_weights(m, seed);
  return m;
}

// ---------------------------------------------------------------- input args

struct InputArgs {
  std::string image;
  std::string noise;  // "WxH"
};

void add_input_flags(CLI::App* cmd, InputArgs& a) {
  cmd->add_option("--image", a.image, "input image (binary PGM/PPM)");
  cmd->add_option("--noise", a.noise,
                  "deterministic noise input, WxH (e.g. 96x96)");
}

FeatureMap resolve_input(const InputArgs& a, int channels,
                         std::uint64_t seed) {
  if (!a.image.empty()) {
    FeatureMap f = read_image(a.image);
    if (f.channels != channels)
      throw std::invalid_argument(
          "input image has " + std::to_string(f.channels) +
          " channels, the model expects " + std::to_string(channels));
    return f;
  }
  if (!a.noise.empty()) {
    int w = 0, h = 0;
    char extra;
    if (std::sscanf(a.noise.c_str(), "%dx%d%c", &w, &h, &extra) != 2 ||
        w <= 0 || h <= 0)
      throw std::invalid_argument("--noise wants WxH, got: " + a.noise);
    return noise_image(h, w, channels, seed);
  }
  throw std::invalid_argument("pass --image or --noise WxH");
}

// ------------------------------------------------------------------- helpers

HardwareTarget resolve_target(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("pass --target <preset|path>");
  if (s == "A" || s == "B" || s == "C" || s == "E") return preset_target(s);
  return load_target(s);
}

void write_text_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fputs(content.c_str(), stdout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write output file: " + path);
  out << content;
  if (!out) throw IoError("cannot write output file: " + path);
}

void print_counters(const char* flow, const FlowCounters& c) {
  std::printf("%s.macs_total: %llu\n", flow,
              static_cast<unsigned long long>(c.macs_total));
  std::printf("%s.dram_feature_bytes: %llu\n", flow,
              static_cast<unsigned long long>(c.dram_feature_bytes));
  std::printf("%s.line_buffer_peak_bytes: %llu\n", flow,
              static_cast<unsigned long long>(c.line_buffer_peak_bytes));
  std::printf("%s.block_buffer_peak_bytes: %llu\n", flow,
              static_cast<unsigned long long>(c.block_buffer_peak_bytes));
}

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b))
    throw std::logic_error("flow outputs differ in shape");
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    d = std::max(d, std::fabs(a.data[i] - b.data[i]));
  return d;
}

int count_conv3x3(const ModelSpec& m) {
  int n = 0;
  for (const LayerSpec& l : m.layers)
    if (l.kind == LayerKind::kConv3x3) ++n;
  return n;
}

// ------------------------------------------------------------------ commands

int run_build(const ModelArgs& ma, std::uint64_t seed,
              const std::string& out) {
  if (out.empty()) throw std::invalid_argument("build wants --out <prefix>");
  ModelSpec m = resolve_model(ma, seed);
  validate_model(m);
  const std::string json_path = out + ".json";
  const std::string blob_path = out + ".erwb";
  save_model_json(m, json_path);
  save_weights(m, blob_path);
  std::printf("model: %s\n", m.name.c_str());
  std::printf("layers: %d (%d conv3x3)\n", static_cast<int>(m.layers.size()),
              count_conv3x3(m));
  std::printf("params: %llu\n",
              static_cast<unsigned long long>(param_count(m)));
  const Rational mpp = macs_per_output_pixel(m);
  std::printf("macs_per_pixel: %s (%.1f)\n", mpp.str().c_str(),
              mpp.to_double());
  std::printf("wrote: %s %s\n", json_path.c_str(), blob_path.c_str());
  return 0;
}

int run_infer(const ModelArgs& ma, const InputArgs& ia, std::uint64_t seed,
              const std::string& flow, int block, int bpf,
              const std::string& out_image, const std::string& out_raw) {
  ModelSpec m = resolve_model(ma, seed);
  const FeatureMap img = resolve_input(ia, m.input_channels, seed);
  FlowCounters c;
  FeatureMap out;
  if (flow == "whole") {
    out = infer_whole(m, img, &c, bpf);
  } else if (flow == "recompute") {
    out = infer_block_recompute(m, img, BlockSchedule{block, bpf}, &c);
  } else if (flow == "reuse") {
    out = infer_block_reuse(m, img, BlockSchedule{block, bpf}, &c);
  } else {
    throw std::invalid_argument("unknown flow: " + flow +
                                " (whole, recompute, reuse)");
  }
  std::printf("model: %s\n", m.name.c_str());
  std::printf("flow: %s\n", flow.c_str());
  std::printf("input: %dx%dx%d\n", img.width, img.height, img.channels);
  std::printf("output: %dx%dx%d\n", out.width, out.height, out.channels);
  print_counters(flow.c_str(), c);
  if (!out_image.empty()) {
    write_image(out, out_image);
    std::printf("wrote: %s\n", out_image.c_str());
  }
  if (!out_raw.empty()) {
    write_raw_tensor(out, out_raw);
    std::printf("wrote: %s\n", out_raw.c_str());
  }
  return 0;
}

int run_verify_flows(const ModelArgs& ma, const InputArgs& ia,
                     std::uint64_t seed, int block, int bpf) {
  ModelSpec m = resolve_model(ma, seed);
  const FeatureMap img = resolve_input(ia, m.input_channels, seed);
  const BlockSchedule sched{block, bpf};

  FlowCounters cw, cr, cu;
  std::vector<TileStats> tiles;
  const FeatureMap ow = infer_whole(m, img, &cw, bpf);
  const FeatureMap orc = infer_block_recompute(m, img, sched, &cr, &tiles);
  const FeatureMap oru = infer_block_reuse(m, img, sched, &cu);

  std::printf("model: %s\n", m.name.c_str());
  std::printf("input: %dx%dx%d\n", img.width, img.height, img.channels);
  std::printf("block_size: %d (output domain)\n", block);
  print_counters("whole", cw);
  print_counters("recompute", cr);
  print_counters("reuse", cu);

  const double dr = max_abs_diff(ow, orc);
  const double du = max_abs_diff(ow, oru);
  std::printf("max_abs_diff_recompute: %.17g\n", dr);
  std::printf("max_abs_diff_reuse: %.17g\n", du);
  const bool macs_equal = cu.macs_total == cw.macs_total;
  std::printf("reuse_macs_equal_whole: %s\n", macs_equal ? "yes" : "no");

  // Analytic references against the measured counters.
  ExecPlan p = build_plan(m);
  bind_image(p, img.height, img.width);
  const std::uint64_t lb_formula = line_buffer_bytes(m, img.width, block, bpf);
  std::printf("line_buffer_formula_bytes: %llu (measured %+.2f%%)\n",
              static_cast<unsigned long long>(lb_formula),
              lb_formula == 0 ? 0.0
                              : 100.0 * (static_cast<double>(
                                             cu.line_buffer_peak_bytes) -
                                         static_cast<double>(lb_formula)) /
                                    static_cast<double>(lb_formula));
  const std::uint64_t bb_reuse = block_buffer_bytes(m, block, bpf,
                                                    FlowKind::kReuse);
  const std::uint64_t bb_rec = block_buffer_bytes(m, block, bpf,
                                                  FlowKind::kRecompute);
  std::printf("block_buffer_formula_bytes: reuse %llu, recompute %llu\n",
              static_cast<unsigned long long>(bb_reuse),
              static_cast<unsigned long long>(bb_rec));

  // Interior-tile recompute overhead: tiles whose input demand stays inside
  // the image see the full halo; their per-pixel rate against the whole
  // image's is the recompute tax.
  std::uint64_t tile_macs = 0;
  std::int64_t tile_px = 0;
  for (const TileStats& ts : tiles) {
    const Region in = required_input_region(p, ts.out);
    if (in.y0 >= 0 && in.x0 >= 0 && in.y1 <= p.input_h && in.x1 <= p.input_w) {
      tile_macs = ts.macs;
      tile_px = ts.out.area();
      break;
    }
  }
  if (tile_px > 0) {
    const Rational measured =
        Rational(static_cast<std::int64_t>(tile_macs) *
                     (static_cast<std::int64_t>(p.out_h) * p.out_w) -
                 static_cast<std::int64_t>(cw.macs_total) * tile_px,
                 static_cast<std::int64_t>(cw.macs_total) * tile_px);
    std::printf("measured_interior_overhead: %.4f\n", measured.to_double());
    // Plain-stack references at this halo depth.
    const int s_in = block / m.scale + 2 * p.halo_in;
    if (p.halo_in > 0 && 2 * p.halo_in < s_in) {
      std::printf("exact_formula_overhead(D=%d, s_in=%d): %.4f\n", p.halo_in,
                  s_in, recompute_overhead_exact(p.halo_in, s_in));
      std::printf("closed_form_overhead(D=%d, s_in=%d): %.4f\n", p.halo_in,
                  s_in, recompute_overhead_closed(p.halo_in, s_in));
    }
  }

  const bool ok = dr == 0.0 && du == 0.0 && macs_equal;
  std::printf("verify: %s\n", ok ? "OK" : "MISMATCH");
  return ok ? 0 : kExitVerify;
}

int run_cost(const ModelArgs& ma, std::uint64_t seed, HardwareTarget t,
             const std::string& format, const std::string& out) {
  ModelSpec m = resolve_model(ma, seed);
  const CostReport rep = make_cost_report(m, t);
  std::string content;
  if (format == "csv")
    content = cost_report_csv_header() + cost_report_csv_row(rep);
  else
    content = cost_report_text(rep);
  write_text_output(out, content);
  return 0;
}

int run_scan(const std::string& family, const std::string& variant,
             HardwareTarget t, int b_min, int b_max, int r_max,
             const std::string& format, const std::string& out) {
  const std::vector<ScanRow> rows =
      scan(parse_family(family), parse_variant(variant), t, b_min, b_max,
           r_max);
  const std::string content =
      format == "text" ? scan_text(rows, t) : scan_csv(rows);
  write_text_output(out, content);
  if (!out.empty()) {
    int feasible = 0;
    const ScanRow* best = nullptr;
    for (const ScanRow& r : rows) {
      if (!r.feasible) continue;
      ++feasible;
      if (!best || best->r_e < r.r_e) best = &r;
    }
    std::printf("scan: %d rows, %d feasible\n", static_cast<int>(rows.size()),
                feasible);
    if (best)
      std::printf("max R_E: %s at B=%d\n", best->r_e.str().c_str(), best->b);
    std::printf("wrote: %s\n", out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-based CNN inference engine and hardware cost explorer"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int block = 32;
  int bpf = 1;
  std::string target_str;
  std::string format;
  std::string out;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed for weights and noise inputs");
    cmd->set_config("--config", "",
                    "read flags from a config file; command line wins");
    return cmd;
  };

  // build
  ModelArgs build_ma;
  CLI::App* cmd_build = add_common(app.add_subcommand(
      "build", "construct a model, write weight blob + description"));
  add_model_flags(cmd_build, build_ma);
  cmd_build->add_option("--out", out, "output path prefix")->required();

  // infer
  ModelArgs infer_ma;
  InputArgs infer_ia;
  std::string infer_flow = "whole";
  std::string infer_out_raw;
  CLI::App* cmd_infer = add_common(
      app.add_subcommand("infer", "run one inference flow and report counters"));
  add_model_flags(cmd_infer, infer_ma);
  add_input_flags(cmd_infer, infer_ia);
  cmd_infer->add_option("--flow", infer_flow, "whole, recompute or reuse");
  cmd_infer->add_option("--block-size", block, "output-domain block width");
  cmd_infer->add_option("--bytes-per-feature", bpf, "feature word size");
  cmd_infer->add_option("--out", out, "output image (PGM/PPM)");
  cmd_infer->add_option("--out-raw", infer_out_raw, "output raw tensor dump");

  // verify-flows
  ModelArgs verify_ma;
  InputArgs verify_ia;
  CLI::App* cmd_verify = add_common(app.add_subcommand(
      "verify-flows",
      "run all three flows, check bit-exact agreement and counters"));
  add_model_flags(cmd_verify, verify_ma);
  add_input_flags(cmd_verify, verify_ia);
  cmd_verify->add_option("--block-size", block, "output-domain block width");
  cmd_verify->add_option("--bytes-per-feature", bpf, "feature word size");

  // cost
  ModelArgs cost_ma;
  CLI::App* cmd_cost = add_common(app.add_subcommand(
      "cost", "analytic cost report for a model on a hardware target"));
  add_model_flags(cmd_cost, cost_ma);
  CLI::Option* cost_target =
      cmd_cost->add_option("--target", target_str, "preset (A/B/C/E) or JSON");
  cost_target->required();
  CLI::Option* cost_block = cmd_cost->add_option(
      "--block-size", block, "override the target's input block width");
  CLI::Option* cost_bpf = cmd_cost->add_option(
      "--bytes-per-feature", bpf, "override the target's feature word size");
  cmd_cost->add_option("--format", format, "text (default) or csv");
  cmd_cost->add_option("--out", out, "write the report here, not stdout");

  // scan
  std::string scan_family = "dnernet";
  std::string scan_variant = "E3R1";
  int b_min = 4, b_max = 40, r_max = 8;
  CLI::App* cmd_scan = add_common(app.add_subcommand(
      "scan", "max feasible expansion ratio per module count on a target"));
  cmd_scan->add_option("--family", scan_family, "dnernet or sr4ernet");
  cmd_scan->add_option("--variant", scan_variant, "E3R1, E1R3 or E3R3");
  CLI::Option* scan_target =
      cmd_scan->add_option("--target", target_str, "preset (A/B/C/E) or JSON");
  scan_target->required();
  CLI::Option* scan_block = cmd_scan->add_option(
      "--block-size", block, "override the target's input block width");
  CLI::Option* scan_bpf = cmd_scan->add_option(
      "--bytes-per-feature", bpf, "override the target's feature word size");
  cmd_scan->add_option("--b-min", b_min, "smallest module count");
  cmd_scan->add_option("--b-max", b_max, "largest module count");
  cmd_scan->add_option("--r-max", r_max, "largest base expansion ratio");
  cmd_scan->add_option("--format", format, "csv (default) or text");
  cmd_scan->add_option("--out", out, "write rows here, not stdout");

  try {
    app.parse(argc, argv);

    if (cmd_build->parsed()) return run_build(build_ma, seed, out);
    if (cmd_infer->parsed())
      return run_infer(infer_ma, infer_ia, seed, infer_flow, block, bpf, out,
                       infer_out_raw);
    if (cmd_verify->parsed())
      return run_verify_flows(verify_ma, verify_ia, seed, block, bpf);
    if (cmd_cost->parsed()) {
      HardwareTarget t = resolve_target(target_str);
      if (cost_block->count() > 0) t.block_size = block;
      if (cost_bpf->count() > 0) t.bytes_per_feature = bpf;
      return run_cost(cost_ma, seed, t, format.empty() ? "text" : format,
                      out);
    }
    if (cmd_scan->parsed()) {
      HardwareTarget t = resolve_target(target_str);
      if (scan_block->count() > 0) t.block_size = block;
      if (scan_bpf->count() > 0) t.bytes_per_feature = bpf;
      return run_scan(scan_family, scan_variant, t, b_min, b_max, r_max,
                      format.empty() ? "csv" : format, out);
    }
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitVerify;
  }
}
