#include "lffuse/colmap.hpp"
#include "lffuse/dpv.hpp"
#include "lffuse/error.hpp"
#include "lffuse/fusion.hpp"
#include "lffuse/image_io.hpp"
#include "lffuse/metrics.hpp"
#include "lffuse/parallel.hpp"
#include "lffuse/pipeline.hpp"
#include "lffuse/plane_sweep.hpp"
#include "lffuse/refine.hpp"
#include "lffuse/render.hpp"
#include "lffuse/scvr.hpp"
#include "lffuse/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lffuse;

namespace {

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed: " + path);
}

void make_dirs(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
}

json mapping_json(const ScaleMapping& m) {
  return {{"alpha", m.alpha}, {"beta", m.beta}, {"rms_error", m.rms_error}, {"n_anchors", m.n_anchors}};
}

json report_json(const MetricsReport& r) {
  json j{{"mse", r.mse}, {"ppe_0.05", r.ppe_005}, {"ppe_0.1", r.ppe_01}};
  if (r.psnr) j["psnr"] = *r.psnr;
  if (r.ssim) j["ssim"] = *r.ssim;
  j["pixels"] = r.pixels;
  j["masked_pixels"] = r.masked_pixels;
  j["mask_coverage"] = r.mask_coverage;
  return j;
}

std::pair<int, int> parse_grid(const std::string& s) {
  static const std::regex pattern(R"((\d+)x(\d+))");
  std::smatch m;
  if (!std::regex_match(s, m, pattern)) throw Error(ErrorCode::Parse, "grid must look like 7x7, got '" + s + "'");
  return {std::stoi(m[1]), std::stoi(m[2])};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string scene = "three-plane";
  std::uint64_t seed = 42;
  int size = 128;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  const SceneSpec spec = make_scene_spec(parse_scene_kind(a.scene), a.seed, a.size);
  const SceneBundle b = generate_scene(spec);
  make_dirs(a.out);
  make_dirs(a.out + "/gt");
  const double z_near = spec.layers.front().depth;
  const double z_far = spec.layers.back().depth;

  json rigs = json::array();
  for (std::size_t i = 0; i < b.sources.size(); ++i) {
    const Capture& c = b.sources[i];
    write_light_field(a.out + "/" + c.rig.name, c.lf);
    write_pfm(a.out + "/gt/" + c.rig.name + "_depth.pfm", c.depth);
    const double fb = c.rig.camera.fx * c.rig.baseline;
    rigs.push_back({{"name", c.rig.name},
                    {"lf", c.rig.name},
                    {"focal", c.rig.camera.fx},
                    {"baseline", c.rig.baseline},
                    {"suggested_dmin", fb / (1.5 * z_far)},
                    {"suggested_dmax", 1.5 * fb / z_near}});
  }
  const Capture& t = b.target;
  write_png(a.out + "/target.png", b.target_image());
  write_light_field(a.out + "/target_lf", t.lf);
  write_pfm(a.out + "/gt/target_depth.pfm", t.depth);
  write_pfm(a.out + "/gt/target_inverse_depth.pfm", Plane(1.0 / t.depth));
  write_pfm(a.out + "/gt/target_disparity.pfm", t.disparity);
  write_mask_png(a.out + "/mask.png", covisible_target_mask(b, 3));
  emit_colmap_fixture(b, a.out + "/sparse");

  json scene{{"scene", a.scene},
             {"seed", a.seed},
             {"size", a.size},
             {"rigs", rigs},
             {"target",
              {{"name", t.rig.name},
               {"image", "target.png"},
               {"focal", t.rig.camera.fx},
               {"baseline", t.rig.baseline},
               {"grid", std::to_string(t.rig.rows) + "x" + std::to_string(t.rig.cols)},
               {"pixels_per_inverse_depth", t.rig.camera.fx * t.rig.baseline}}}};
  write_json(a.out + "/scene.json", scene);
}

// ----------------------------------------------------------- estimate-dpv

struct EstimateArgs {
  std::string lf;
  PlaneSweepConfig cfg = [] {
    PlaneSweepConfig c;
    c.temperature_spread = kPipelinePresets.temperature_spread;
    return c;
  }();
  std::string out;
};

void run_estimate(const EstimateArgs& a) {
  const LightField lf = read_light_field(a.lf);
  write_dpv_file(a.out, estimate_dpv(lf, a.cfg));
}

// ------------------------------------------------------------------- scvr

struct ScvrArgs {
  std::string dpv;
  std::string sparse;
  std::string view;
  ScvrConfig cfg;
  std::string out;
  std::string log;
};

void run_scvr(const ScvrArgs& a) {
  const Dpv dpv = read_dpv_file(a.dpv);
  const SparseModel model = parse_sparse_model(a.sparse);
  const long id = model.image_id(a.view);
  const AnchorSet anchors = build_anchor_set(model, {id});
  const DepthRange range = compute_depth_range(anchors, id);
  const ScvrResult r = scvr_run(dpv, anchors.view(id), range, a.cfg);
  write_dpv_file(a.out, r.volume);

  json hist = json::array();
  for (const auto& h : r.history)
    hist.push_back({{"iteration", h.index}, {"mapping", mapping_json(h.mapping)}, {"planes_kept", h.planes_kept}});
  write_json(a.log, {{"view", a.view},
                     {"anchors", anchors.view(id).size()},
                     {"dropped_anchors", anchors.dropped.count(id) ? anchors.dropped.at(id) : 0L},
                     {"depth_range", {range.min, range.max}},
                     {"converged", r.converged},
                     {"history", hist}});
}

// ------------------------------------------------------------------- fuse

struct FuseArgs {
  std::string sparse;
  std::string target;
  std::vector<std::string> dpvs;
  std::vector<std::string> sources;
  int planes = 100;
  double sigma_pos = 0.0;  // 0 selects the default
  double sigma_dir = 0.2;
  bool renormalize_bins = false;
  std::string out;
  std::string report;
};

void run_fuse(const FuseArgs& a) {
  if (!a.sources.empty() && a.sources.size() != a.dpvs.size())
    throw Error(ErrorCode::Parameter, "--source must be given once per --dpv");
  const SparseModel model = parse_sparse_model(a.sparse);
  const long target_id = model.image_id(a.target);
  const CameraModel target = model.camera_model(target_id);
  const AnchorSet anchors = build_anchor_set(model, {target_id});
  const DepthRange range = compute_depth_range(anchors, target_id);
  const Eigen::VectorXd labels = shared_inverse_depth_labels(range, a.planes);

  std::vector<CameraModel> cams;
  std::vector<WarpedVolume> warped;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < a.dpvs.size(); ++i) {
    const std::string name = a.sources.empty() ? fs::path(a.dpvs[i]).stem().string() : a.sources[i];
    const CameraModel cam = model.camera_model(model.image_id(name));
    const Dpv dpv = read_dpv_file(a.dpvs[i]);
    require_unit(dpv, LabelUnit::InverseDepth, "fuse");
    if (dpv.height() != cam.height || dpv.width() != cam.width)
      throw Error(ErrorCode::Fusion, "volume '" + a.dpvs[i] + "' does not match camera '" + name + "'");
    warped.push_back(warp_volume(dpv, cam, target, labels));
    cams.push_back(cam);
    names.push_back(name);
  }
  const double sigma_pos = a.sigma_pos > 0.0 ? a.sigma_pos : default_sigma_pos(cams);
  const FusionWeights w = fusion_weights(cams, target, sigma_pos, a.sigma_dir);
  const FusionResult fused = fuse_volumes(warped, w, a.renormalize_bins);
  write_dpv_file(a.out, fused.volume);

  json sources = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    long covered = 0;
    for (const auto& m : warped[i].coverage) covered += m.cast<long>().sum();
    sources.push_back({{"name", names[i]},
                       {"w_pos", w.w_pos[i]},
                       {"w_dir", w.w_dir[i]},
                       {"coverage", static_cast<double>(covered) /
                                        (static_cast<double>(target.width) * target.height * a.planes)}});
  }
  write_json(a.report, {{"target", a.target},
                        {"planes", a.planes},
                        {"depth_range", {range.min, range.max}},
                        {"sigma_pos", w.sigma_pos},
                        {"sigma_dir", w.sigma_dir},
                        {"renormalize_bins", a.renormalize_bins},
                        {"zero_mass_pixels", fused.zero_mass_pixels},
                        {"sources", sources}});
}

// -------------------------------------------------------------- disparity

struct DisparityArgs {
  std::string dpv;
  std::string guide;
  RefineConfig cfg = kPipelinePresets.refine;
  std::string out;
};

void run_disparity(const DisparityArgs& a) {
  const Dpv fused = read_dpv_file(a.dpv);
  const Image guide = read_png(a.guide);
  const DisparityMap d = guided_refine(extract_disparity(filter_volume(fused, a.cfg)), guide, a.cfg);
  write_pfm(a.out, d);
  // The learned refinement stage is replaced by the classical filters above.
  std::cout << "refinement: classical-substitute\n";
}

// ----------------------------------------------------------------- render

struct RenderArgs {
  std::string image;
  std::string disparity;
  std::string grid = "7x7";
  std::string mode = "constant";
  double scale = 1.0;
  std::string out;
};

void run_render(const RenderArgs& a) {
  RenderConfig cfg;
  std::tie(cfg.rows, cfg.cols) = parse_grid(a.grid);
  cfg.pixels_per_unit = a.scale;
  if (a.mode == "constant") {
    cfg.mode = FieldMode::ConstantLift;
  } else if (a.mode == "reproject") {
    cfg.mode = FieldMode::ForwardReproject;
  } else {
    throw Error(ErrorCode::Parameter, "unknown render mode '" + a.mode + "'");
  }
  const Image image = read_png(a.image);
  const Plane d = read_pfm(a.disparity);
  if (d.rows() != image.height() || d.cols() != image.width())
    throw Error(ErrorCode::Parameter, "disparity map does not match the image");
  const RenderedLightField r = render_light_field(image, synthesize_disparity_field(d, cfg));
  make_dirs(a.out);
  write_light_field(a.out, r.lf);
  json views = json::array();
  for (int row = 0; row < cfg.rows; ++row)
    for (int col = 0; col < cfg.cols; ++col) {
      const Mask& m = r.valid[static_cast<std::size_t>(row * cfg.cols + col)];
      const std::string name = "mask_" + sai_filename(row, col);
      write_mask_png(a.out + "/" + name, m);
      views.push_back({{"row", row},
                       {"col", col},
                       {"image", sai_filename(row, col)},
                       {"mask", name},
                       {"valid_fraction", m.cast<double>().mean()}});
    }
  write_json(a.out + "/manifest.json",
             {{"grid", a.grid}, {"mode", a.mode}, {"pixels_per_unit", a.scale}, {"views", views}});
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string est;
  std::string gt;
  std::string mask;
  std::string normalize = "none";
  std::string json_out;
};

void run_eval(const EvalArgs& a) {
  Plane est = read_pfm(a.est);
  Plane gt = read_pfm(a.gt);
  if (est.rows() != gt.rows() || est.cols() != gt.cols())
    throw Error(ErrorCode::Parameter, "estimate and ground truth differ in size");
  std::optional<Mask> mask;
  if (!a.mask.empty()) {
    mask = read_mask_png(a.mask);
    if (mask->rows() != gt.rows() || mask->cols() != gt.cols())
      throw Error(ErrorCode::Parameter, "mask does not match the maps");
  }
  const Mask* m = mask ? &*mask : nullptr;
  bool degenerate = false;
  if (a.normalize == "gt-range") {
    // Both maps go through the affine map taking gt's masked range to [0, 1].
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < gt.size(); ++i)
      if (!m || m->data()[i]) {
        lo = std::min(lo, gt.data()[i]);
        hi = std::max(hi, gt.data()[i]);
      }
    if (!(hi > lo)) throw Error(ErrorCode::Rescale, "ground truth has no range to normalize by");
    est = (est - lo) / (hi - lo);
    gt = (gt - lo) / (hi - lo);
  } else if (a.normalize == "rescale") {
    RescaleResult r = linear_rescale_to_reference(est, gt, m);
    est = std::move(r.values);
    degenerate = r.degenerate;
  } else if (a.normalize != "none") {
    throw Error(ErrorCode::Parameter, "unknown normalization '" + a.normalize + "'");
  }
  const MetricsReport r = disparity_report(est, gt, m);
  json j = report_json(r);
  j["normalize"] = a.normalize;
  if (degenerate) j["degenerate_rescale"] = true;
  std::cout << j.dump(2) << '\n';
  write_json(a.json_out, j);
}

// ---------------------------------------------------------------- eval-lf

struct EvalLfArgs {
  std::string est;
  std::string gt;
  std::string json_out;
};

void run_eval_lf(const EvalLfArgs& a) {
  const LightField est = read_light_field(a.est);
  const LightField gt = read_light_field(a.gt);
  if (est.rows() != gt.rows() || est.cols() != gt.cols() || est.height() != gt.height() ||
      est.width() != gt.width() || est.n_channels() != gt.n_channels())
    throw Error(ErrorCode::Parameter, "light fields differ in shape");
  json views = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (int r = 0; r < est.rows(); ++r)
    for (int c = 0; c < est.cols(); ++c) {
      std::optional<Mask> mask;
      const fs::path mask_path = fs::path(a.est) / ("mask_" + sai_filename(r, c));
      if (fs::exists(mask_path)) mask = read_mask_png(mask_path.string());
      const Mask* m = mask ? &*mask : nullptr;
      const double p = psnr(est.view(r, c), gt.view(r, c), 1.0, m);
      const double s = ssim(est.view(r, c), gt.view(r, c), 1.0, m);
      psnr_sum += p;
      ssim_sum += s;
      views.push_back({{"row", r}, {"col", c}, {"psnr", p}, {"ssim", s}, {"masked", mask.has_value()}});
    }
  const double n = static_cast<double>(est.rows() * est.cols());
  json j{{"mean_psnr", psnr_sum / n}, {"mean_ssim", ssim_sum / n}, {"views", views}};
  std::cout << "mean_psnr " << psnr_sum / n << " mean_ssim " << ssim_sum / n << '\n';
  write_json(a.json_out, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-field disparity fusion pipeline"};
  app.require_subcommand(1);
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic scene bundle");
  s->add_option("--scene", synth.scene)->check(CLI::IsMember({"single-plane", "two-plane", "three-plane"}));
  s->add_option("--seed", synth.seed);
  s->add_option("--size", synth.size)->check(CLI::Range(16, 4096));
  s->add_option("--out", synth.out)->required();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate-dpv", "Plane-sweep DPV of a light field");
  e->add_option("--lf", est.lf)->required();
  e->add_option("--planes", est.cfg.n_planes);
  e->add_option("--dmin", est.cfg.d_min)->required();
  e->add_option("--dmax", est.cfg.d_max)->required();
  e->add_option("--window", est.cfg.window);
  auto* temp = e->add_option("--temp", est.cfg.temperature, "Fixed softmin temperature");
  e->add_option("--temp-spread", est.cfg.temperature_spread, "Calibrated temperature multiplier (0 disables)")
      ->excludes(temp);
  e->add_option("--out", est.out)->required();

  ScvrArgs sc;
  auto* v = app.add_subcommand("scvr", "Rescale a DPV to world-consistent inverse depth");
  v->add_option("--dpv", sc.dpv)->required();
  v->add_option("--sparse", sc.sparse)->required();
  v->add_option("--view", sc.view)->required();
  v->add_option("--iters", sc.cfg.iterations);
  v->add_option("--eps", sc.cfg.convergence_eps);
  v->add_option("--planes", sc.cfg.n_planes, "Resampled plane count (0 keeps the input count)");
  v->add_option("--out", sc.out)->required();
  v->add_option("--log", sc.log);

  FuseArgs fu;
  auto* f = app.add_subcommand("fuse", "Warp rescaled DPVs to the target and fuse them");
  f->add_option("--sparse", fu.sparse)->required();
  f->add_option("--target", fu.target)->required();
  f->add_option("--dpv", fu.dpvs)->required();
  f->add_option("--source", fu.sources, "Image name per --dpv (default: file stem)");
  f->add_option("--planes", fu.planes);
  f->add_option("--sigma-pos", fu.sigma_pos, "0 selects the mean source distance");
  f->add_option("--sigma-dir", fu.sigma_dir);
  f->add_flag("--renormalize-bins", fu.renormalize_bins);
  f->add_option("--out", fu.out)->required();
  f->add_option("--report", fu.report);

  DisparityArgs dis;
  auto* d = app.add_subcommand("disparity", "Filter, extract and refine the fused disparity");
  d->add_option("--dpv", dis.dpv)->required();
  d->add_option("--guide", dis.guide)->required();
  d->add_option("--spatial-radius", dis.cfg.spatial_radius);
  d->add_option("--plane-radius", dis.cfg.plane_radius);
  d->add_option("--bilateral-radius", dis.cfg.bilateral_radius);
  d->add_option("--sigma-spatial", dis.cfg.sigma_spatial);
  d->add_option("--sigma-range", dis.cfg.sigma_range);
  d->add_option("--out", dis.out)->required();

  RenderArgs ren;
  auto* r = app.add_subcommand("render", "Render a light field from an image and disparity");
  r->add_option("--image", ren.image)->required();
  r->add_option("--disparity", ren.disparity)->required();
  r->add_option("--grid", ren.grid);
  r->add_option("--mode", ren.mode)->check(CLI::IsMember({"constant", "reproject"}));
  r->add_option("--scale", ren.scale, "Pixels per angular step per unit of disparity");
  r->add_option("--out", ren.out)->required();

  EvalArgs ev;
  auto* m = app.add_subcommand("eval", "Disparity metrics");
  m->add_option("--est", ev.est)->required();
  m->add_option("--gt", ev.gt)->required();
  m->add_option("--mask", ev.mask);
  m->add_option("--normalize", ev.normalize)->check(CLI::IsMember({"none", "gt-range", "rescale"}));
  m->add_option("--json", ev.json_out);

  EvalLfArgs el;
  auto* l = app.add_subcommand("eval-lf", "Light-field PSNR/SSIM per sub-aperture image");
  l->add_option("--est", el.est)->required();
  l->add_option("--gt", el.gt)->required();
  l->add_option("--json", el.json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (e->count("--temp") > 0) est.cfg.temperature_spread = 0.0;
    set_thread_count(threads);
    if (*s) run_synth(synth);
    if (*e) run_estimate(est);
    if (*v) run_scvr(sc);
    if (*f) run_fuse(fu);
    if (*d) run_disparity(dis);
    if (*r) run_render(ren);
    if (*m) run_eval(ev);
    if (*l) run_eval_lf(el);
  } catch (const Error& err) {
    std::cerr << "error (" << to_string(err.code()) << "): " << err.what() << '\n';
    return exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
