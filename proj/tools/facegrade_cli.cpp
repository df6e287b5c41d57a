// Command-line front end: headshot correction, yearbook generation,
// semi-automatic correction with user masks, and standalone stage runs
// for debugging (skin mask extraction, color grading, matting).

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "facegrade/pipeline.hpp"
#include "facegrade/png_io.hpp"

namespace {

using namespace facegrade;

struct ConfigOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> window;
  std::optional<double> epsilon;
  std::optional<double> lipschitz;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<double> eta_s_scale;
  std::optional<double> eta_b_scale;
  std::optional<int> idt_iters;
  std::optional<int> idt_bins;
  bool no_luma = false;
};

void add_config_options(CLI::App* cmd, ConfigOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--seed", opts.seed, "RNG seed for clustering and grading");
  cmd->add_option("--window", opts.window, "guided-filter window side (odd)");
  cmd->add_option("--epsilon", opts.epsilon, "local linear model regularizer");
  cmd->add_option("--lipschitz", opts.lipschitz, "solver step-size constant L");
  cmd->add_option("--max-iters", opts.max_iters, "solver iteration cap");
  cmd->add_option("--tol", opts.tol, "solver relative objective tolerance");
  cmd->add_option("--eta-s-scale", opts.eta_s_scale,
                  "skin ball radius per skin pixel");
  cmd->add_option("--eta-b-scale", opts.eta_b_scale,
                  "background ball radius per background pixel");
  cmd->add_option("--idt-iters", opts.idt_iters, "distribution transfer iterations");
  cmd->add_option("--idt-bins", opts.idt_bins, "distribution transfer histogram bins");
  cmd->add_flag("--no-luma", opts.no_luma, "skip the luminance preservation stage");
}

PipelineConfig resolve_config(const ConfigOpts& opts) {
  PipelineConfig cfg =
      opts.config_path.empty() ? PipelineConfig{} : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.window) cfg.gif_window = *opts.window;
  if (opts.epsilon) cfg.epsilon = *opts.epsilon;
  if (opts.lipschitz) cfg.lipschitz = *opts.lipschitz;
  if (opts.max_iters) cfg.max_iters = *opts.max_iters;
  if (opts.tol) cfg.tol = *opts.tol;
  if (opts.eta_s_scale) cfg.eta_s_scale = *opts.eta_s_scale;
  if (opts.eta_b_scale) cfg.eta_b_scale = *opts.eta_b_scale;
  if (opts.idt_iters) cfg.idt_iterations = *opts.idt_iters;
  if (opts.idt_bins) cfg.idt_bins = *opts.idt_bins;
  if (opts.no_luma) cfg.luma_enabled = false;
  return cfg;
}

void write_report(const std::string& path, const RunReport& report) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error(errc::invalid_input, "cannot write report to " + path);
  out << report.to_json().dump(2) << "\n";
}

void write_solver_log(const std::string& path, const SolveResult& solve) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error(errc::invalid_input, "cannot write solver log to " + path);
  out << "iteration,objective,d_skin,d_background\n";
  for (const IterRecord& rec : solve.history) {
    out << rec.iteration << "," << rec.objective << "," << rec.skin_distance
        << "," << rec.background_distance << "\n";
  }
}

/// Background spec: either a PNG path or a hex color like "#4a6fb3"
/// expanded to a flat image.
ImageRGB resolve_background(const std::string& spec, int width, int height) {
  if (!spec.empty() && spec.front() == '#') {
    if (spec.size() != 7)
      throw Error(errc::invalid_input, "hex color must look like #rrggbb");
    const auto hex = [&](int pos) {
      const std::string byte = spec.substr(pos, 2);
      char* end = nullptr;
      const long v = std::strtol(byte.c_str(), &end, 16);
      if (end != byte.c_str() + 2)
        throw Error(errc::invalid_input, "invalid hex color " + spec);
      return static_cast<double>(v) / 255.0;
    };
    ImageRGB out(width, height);
    const double rgb[3] = {hex(1), hex(3), hex(5)};
    for (int c = 0; c < 3; ++c) out.channel[c].fill(rgb[c]);
    return out;
  }
  ImageRGB img = load_png(spec);
  if (img.width() != width || img.height() != height)
    throw Error(errc::invalid_input, "background image must be " +
                                         std::to_string(width) + "x" +
                                         std::to_string(height));
  return img;
}

int run(int argc, char** argv) {
  CLI::App app{"guided facial skin color correction"};
  app.require_subcommand(1);

  // correct
  auto* correct = app.add_subcommand("correct", "correct a headshot toward a target");
  std::string in_path, tgt_path, cands_path, tgt_cands_path, out_path;
  std::string report_path, solver_log_path, mask_path, tgt_mask_path;
  ConfigOpts correct_cfg;
  correct->add_option("--input", in_path)->required();
  correct->add_option("--target", tgt_path)->required();
  correct->add_option("--candidates", cands_path, "face candidates JSON for the input");
  correct->add_option("--target-candidates", tgt_cands_path);
  correct->add_option("--output", out_path)->required();
  correct->add_option("--mask", mask_path, "grayscale PNG replacing the computed skin region");
  correct->add_option("--target-mask", tgt_mask_path);
  correct->add_option("--report", report_path, "write a JSON run report");
  correct->add_option("--solver-log", solver_log_path, "write per-iteration CSV");
  add_config_options(correct, correct_cfg);

  // yearbook
  auto* yearbook = app.add_subcommand("yearbook", "crop, correct, and replace the background");
  std::string yb_in, yb_tgt, yb_cands, yb_tgt_cands, yb_out, yb_bg;
  std::string yb_report, yb_alpha_out, yb_solver_log;
  ConfigOpts yearbook_cfg;
  yearbook->add_option("--input", yb_in)->required();
  yearbook->add_option("--target", yb_tgt)->required();
  yearbook->add_option("--candidates", yb_cands)->required();
  yearbook->add_option("--target-candidates", yb_tgt_cands)->required();
  yearbook->add_option("--output", yb_out)->required();
  yearbook->add_option("--background", yb_bg, "PNG path or #rrggbb hex color")->required();
  yearbook->add_option("--alpha-out", yb_alpha_out, "write the alpha-mat as grayscale PNG");
  yearbook->add_option("--report", yb_report);
  yearbook->add_option("--solver-log", yb_solver_log);
  add_config_options(yearbook, yearbook_cfg);

  // semiauto
  auto* semiauto = app.add_subcommand("semiauto", "correct with user-supplied region masks");
  std::string sa_in, sa_tgt, sa_skin, sa_bg, sa_tgt_skin, sa_out, sa_report;
  ConfigOpts semiauto_cfg;
  semiauto->add_option("--input", sa_in)->required();
  semiauto->add_option("--target", sa_tgt)->required();
  semiauto->add_option("--skin-mask", sa_skin)->required();
  semiauto->add_option("--bg-mask", sa_bg)->required();
  semiauto->add_option("--target-skin-mask", sa_tgt_skin)->required();
  semiauto->add_option("--output", sa_out)->required();
  semiauto->add_option("--report", sa_report);
  add_config_options(semiauto, semiauto_cfg);

  // extract-mask
  auto* extract = app.add_subcommand("extract-mask", "write the computed skin region");
  std::string em_in, em_cands, em_mask_out;
  ConfigOpts extract_cfg;
  extract->add_option("--input", em_in)->required();
  extract->add_option("--candidates", em_cands)->required();
  extract->add_option("--mask-out", em_mask_out)->required();
  add_config_options(extract, extract_cfg);

  // grade
  auto* grade = app.add_subcommand("grade", "write the color-graded guide image");
  std::string gr_in, gr_tgt, gr_cands, gr_tgt_cands, gr_out, gr_mask, gr_tgt_mask;
  ConfigOpts grade_cfg;
  grade->add_option("--input", gr_in)->required();
  grade->add_option("--target", gr_tgt)->required();
  grade->add_option("--candidates", gr_cands);
  grade->add_option("--target-candidates", gr_tgt_cands);
  grade->add_option("--mask", gr_mask);
  grade->add_option("--target-mask", gr_tgt_mask);
  grade->add_option("--output", gr_out)->required();
  add_config_options(grade, grade_cfg);

  // matte
  auto* matte = app.add_subcommand("matte", "estimate the alpha-mat for an image");
  std::string mt_in, mt_cands, mt_alpha_out, mt_bg, mt_out;
  ConfigOpts matte_cfg;
  matte->add_option("--input", mt_in)->required();
  matte->add_option("--candidates", mt_cands)->required();
  matte->add_option("--alpha-out", mt_alpha_out)->required();
  matte->add_option("--background", mt_bg, "composite against this background too");
  matte->add_option("--output", mt_out, "composite output (requires --background)");
  add_config_options(matte, matte_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(errc::invalid_input);
  }

  const auto load_cands = [](const std::string& path) {
    if (path.empty())
      throw Error(errc::invalid_input, "missing face candidates file");
    return load_candidates(path);
  };

  if (correct->parsed()) {
    const PipelineConfig cfg = resolve_config(correct_cfg);
    const ImageRGB input = load_png(in_path);
    const ImageRGB target = load_png(tgt_path);
    MaskOverrides overrides;
    if (!mask_path.empty()) overrides.input_skin = load_mask_png(mask_path);
    if (!tgt_mask_path.empty()) overrides.target_skin = load_mask_png(tgt_mask_path);
    std::vector<RectCandidate> cands = load_cands(cands_path);
    std::vector<RectCandidate> tgt_cands =
        overrides.target_skin ? std::vector<RectCandidate>{}
                              : load_cands(tgt_cands_path);
    const CorrectResult result =
        correct_headshot(input, target, cands, tgt_cands, cfg, overrides);
    save_png(out_path, result.image);
    write_report(report_path, result.report);
    write_solver_log(solver_log_path, result.core.solve);
  } else if (yearbook->parsed()) {
    const PipelineConfig cfg = resolve_config(yearbook_cfg);
    const ImageRGB input = load_png(yb_in);
    const ImageRGB target = load_png(yb_tgt);
    const ImageRGB background =
        resolve_background(yb_bg, cfg.crop_side, cfg.crop_side);
    const YearbookResult result =
        yearbook_generate(input, target, background, load_cands(yb_cands),
                          load_cands(yb_tgt_cands), cfg);
    save_png(yb_out, result.image);
    if (!yb_alpha_out.empty()) save_gray_png(yb_alpha_out, result.alpha.alpha);
    write_report(yb_report, result.report);
  } else if (semiauto->parsed()) {
    const PipelineConfig cfg = resolve_config(semiauto_cfg);
    const ImageRGB source = load_png(sa_in);
    const ImageRGB target = load_png(sa_tgt);
    RunReport report;
    const ImageRGB out = semiauto_correct(source, target, load_mask_png(sa_skin),
                                          load_mask_png(sa_bg),
                                          load_mask_png(sa_tgt_skin), cfg, &report);
    save_png(sa_out, out);
    write_report(sa_report, report);
  } else if (extract->parsed()) {
    const PipelineConfig cfg = resolve_config(extract_cfg);
    const ImageRGB input = load_png(em_in);
    const SkinExtraction ex = extract_skin(input, load_cands(em_cands), cfg);
    save_mask_png(em_mask_out, ex.skin);
  } else if (grade->parsed()) {
    const PipelineConfig cfg = resolve_config(grade_cfg);
    const ImageRGB input = load_png(gr_in);
    const ImageRGB target = load_png(gr_tgt);
    RegionMask input_skin = gr_mask.empty()
                                ? extract_skin(input, load_cands(gr_cands), cfg).skin
                                : load_mask_png(gr_mask);
    RegionMask target_skin =
        gr_tgt_mask.empty()
            ? extract_skin(target, load_cands(gr_tgt_cands), cfg).skin
            : load_mask_png(gr_tgt_mask);
    if (input_skin.empty() || target_skin.empty())
      throw Error(errc::skin_region_not_found, "skin region not found");
    const ColorSampleSet mapped =
        idt_transfer(collect_samples(input, input_skin),
                     collect_samples(target, target_skin), cfg.idt_config());
    save_png(gr_out, assemble_guide(input, mapped, input_skin));
  } else if (matte->parsed()) {
    const PipelineConfig cfg = resolve_config(matte_cfg);
    const ImageRGB input = load_png(mt_in);
    const SkinExtraction ex = extract_skin(input, load_cands(mt_cands), cfg);
    std::vector<std::string> warnings;
    const MattingConfig mcfg = cfg.matting_config();
    const Trimap trimap = init_trimap(ex.face, ex.skin, input, mcfg, &warnings);
    for (const std::string& msg : warnings) std::cerr << "warning: " << msg << "\n";
    const AlphaMat alpha = matte_iterate(input, trimap, mcfg);
    save_gray_png(mt_alpha_out, alpha.alpha);
    if (!mt_out.empty()) {
      if (mt_bg.empty())
        throw Error(errc::invalid_input, "--output requires --background");
      const ImageRGB background =
          resolve_background(mt_bg, input.width(), input.height());
      save_png(mt_out, replace_background(input, alpha, background));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const facegrade::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(facegrade::errc::invalid_input);
  }
}
