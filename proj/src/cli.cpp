#include "hsdetect/cli.hpp"

#include "hsdetect/config.hpp"
#include "hsdetect/cube_io.hpp"
#include "hsdetect/detect.hpp"
#include "hsdetect/evaluate.hpp"
#include "hsdetect/preprocess.hpp"
#include "hsdetect/report.hpp"
#include "hsdetect/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace hsd {
namespace fs = std::filesystem;

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 1;
}

namespace {

const std::vector<std::string> kScenarioNames{"ideal-qd", "ideal-mf", "inductive-mf", "library-mf", "two-stage"};

struct PrepOptions {
  std::string band_mask;  // empty: default rule
  bool no_normalize = false;

  PreprocessOptions get() const {
    PreprocessOptions o;
    if (!band_mask.empty()) o.band_mask = BandMask::parse(band_mask);
    o.normalize = !no_normalize;
    return o;
  }
};

void add_prep_flags(CLI::App* cmd, PrepOptions& p) {
  cmd->add_option("--band-mask", p.band_mask,
                  "Bands to remove, e.g. \"0-4,48-50,121-127\" or \"none\"; default removes those for 128-band cubes");
  cmd->add_flag("--no-normalize", p.no_normalize, "Skip per-pixel median normalization");
}

void add_threads(CLI::App* cmd, unsigned& threads) {
  cmd->add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
}

HyperCube load_cube(const fs::path& path, const PrepOptions& prep, std::ostream& err) {
  auto result = preprocess(read_cube(path), prep.get());
  if (!result.flagged_pixels.empty()) {
    err << "warning: " << path.filename().string() << ": " << result.flagged_pixels.size()
        << " pixel(s) with non-positive median left unnormalized\n";
  }
  return std::move(result.cube);
}

UncertainPolicy parse_policy(const std::string& text) {
  if (text == "positive") return UncertainPolicy::Positive;
  if (text == "negative") return UncertainPolicy::Negative;
  return UncertainPolicy::Exclude;
}

double resolve_prevalence(const std::string& text, const Truth& truth) {
  if (text == "auto") return truth.prevalence();
  const double p = parse_double(text, "--prevalence");
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "cli", "--prevalence must lie in (0, 1] or be auto");
  return p;
}

fs::path make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, "cli", "cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "cli", "cannot write " + path.string());
}

std::string stem_of(const std::string& header) {
  fs::path p(header);
  return p.extension() == ".hdr" ? p.stem().string() : p.filename().string();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const std::string& header_path, std::ostream& out, std::ostream& err) {
  try {
    const auto h = read_envi_header(header_path);
    out << h.samples << "×" << h.lines << "×" << h.bands << " " << to_string(h.interleave) << " "
        << to_string(h.data_type) << "\n";
    out << "byte order: " << (h.byte_order == ByteOrder::Little ? "little" : "big") << "\n";
    out << "header offset: " << h.header_offset << "\n";
    if (h.wavelengths.empty()) {
      out << "wavelengths: none\n";
    } else {
      out << "wavelengths: " << format_number(h.wavelengths.front()) << "-" << format_number(h.wavelengths.back())
          << " nm (" << h.wavelengths.size() << " bands)\n";
    }
    if (h.reflectance_scale) out << "reflectance scale factor: " << format_number(*h.reflectance_scale) << "\n";
    out << "expected data size: " << h.expected_file_size() << " bytes\n";
    return 0;
  } catch (const Error& e) {
    err << "hsdetect inspect: " << e.what() << "\n";
    return 2;
  }
}

// ---------------------------------------------------------------- preprocess

struct PreprocessCmd {
  std::string image, out = ".", name, panel, panel_reflectance;
  std::optional<int> panel_index;
  PrepOptions prep;
};

int cmd_preprocess(const PreprocessCmd& c, std::ostream& out, std::ostream& err) {
  auto cube = read_cube(c.image);
  if (!c.panel.empty()) {
    if (c.panel_reflectance.empty()) {
      throw Error(ErrorCode::InvalidConfig, "preprocess", "--panel requires --panel-reflectance");
    }
    const auto panel = read_cube(c.panel);
    const auto lib = read_spectral_library(c.panel_reflectance);
    const auto* entry = c.panel_index ? lib.find(*c.panel_index) : &lib.entries.front();
    if (entry == nullptr) throw Error(ErrorCode::InvalidConfig, "preprocess", "no panel reflectance entry with that index");
    const auto h = resample_spectrum(entry->spectrum, cube.wavelengths());
    if (h.any_extrapolated()) err << "warning: panel reflectance extrapolated at the axis ends\n";
    cube = reflectance_correct(cube, panel, h.spectrum);
  }
  const std::size_t bands_in = cube.bands();
  auto result = preprocess(cube, c.prep.get());
  const auto dir = make_out_dir(c.out);
  const auto name = c.name.empty() ? stem_of(c.image) : c.name;
  write_cube(dir / (name + ".hdr"), result.cube, make_header(result.cube));
  out << name << ": " << bands_in << " -> " << result.cube.bands() << " bands (removed "
      << (result.applied_mask.removed.empty() ? "none" : result.applied_mask.to_string()) << ")";
  if (!c.prep.no_normalize) out << ", median-normalized";
  out << "\n";
  if (!result.flagged_pixels.empty()) {
    err << "warning: " << result.flagged_pixels.size() << " pixel(s) with non-positive median left unnormalized\n";
  }
  return 0;
}

// ---------------------------------------------------------------- detect

struct DetectCmd {
  std::string image, mask, scenario = "ideal-mf", name, library, source_image, source_mask, seed_template;
  std::string manifest, uncertain = "exclude", prevalence = "auto", out = ".";
  std::optional<int> library_index;
  std::size_t n_pixels = kDefaultTwoStagePixels;
  int target_class = kBloodClass;
  bool uncertain_in_template = false;
  unsigned threads = 1;
  PrepOptions prep;
};

struct RunMetrics {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
};

struct ImageInputs {
  HyperCube cube;
  AnnotationMask mask;
  std::optional<HyperCube> source_cube;
  std::optional<AnnotationMask> source_mask;
};

ImageInputs load_inputs(const std::string& image, const std::string& mask, const std::string& source_image,
                        const std::string& source_mask, const PrepOptions& prep, std::ostream& err) {
  ImageInputs in{load_cube(image, prep, err), {}, {}, {}};
  in.mask = read_annotation(mask, in.cube.lines(), in.cube.samples());
  if (!source_image.empty()) {
    if (source_mask.empty()) throw Error(ErrorCode::InvalidConfig, "detect", "--source-image requires --source-mask");
    in.source_cube = load_cube(source_image, prep, err);
    in.source_mask = read_annotation(source_mask, in.source_cube->lines(), in.source_cube->samples());
  }
  return in;
}

Scenario make_scenario(ScenarioKind kind, const DetectCmd& c, const SpectralLibrary* lib, bool have_source) {
  Scenario sc;
  sc.kind = kind;
  sc.target_class = static_cast<std::uint8_t>(c.target_class);
  sc.n_pixels = c.n_pixels;
  sc.include_uncertain_in_template = c.uncertain_in_template;
  if (c.library_index) {
    sc.library_index = c.library_index;
  } else if (lib != nullptr && !lib->entries.empty()) {
    sc.library_index = lib->entries.front().index;
  }
  if (c.seed_template == "source") {
    sc.two_stage_seed = TemplateSource::SourceImage;
  } else if (c.seed_template == "library") {
    sc.two_stage_seed = TemplateSource::Library;
  } else {
    sc.two_stage_seed = lib == nullptr && have_source ? TemplateSource::SourceImage : TemplateSource::Library;
  }
  return sc;
}

RunMetrics run_one(const std::string& name, const Scenario& sc, const ImageInputs& in, const SpectralLibrary* lib,
                   const DetectCmd& c, const fs::path& dir, std::ostream& out) {
  ScenarioSources sources{in.source_cube ? &*in.source_cube : nullptr, in.source_mask ? &*in.source_mask : nullptr,
                          lib};
  const auto scores = run_scenario(sc, in.cube, &in.mask, sources, Parallel{c.threads});
  const auto truth = make_truth(in.mask, sc.target_class, parse_policy(c.uncertain));
  const auto roc = roc_curve(scores, truth);
  const auto pr = pr_curve(scores, truth);
  const double prevalence = resolve_prevalence(c.prevalence, truth);
  const double eta = threshold_at_prevalence(scores, truth, prevalence);
  const auto cm = confusion_at_threshold(scores, truth, eta);

  const std::string base = name + "_" + std::string(to_string(sc.kind));
  write_score_map(dir / (base + ".hdr"), scores);
  write_curve_csv(dir / (base + "_pr.csv"), pr);
  write_curve_csv(dir / (base + "_roc.csv"), roc);
  std::ostringstream m;
  m << "image,scenario,auc_roc,auc_pr,prevalence,eta,tp,fp,fn,tn\n"
    << name << "," << to_string(sc.kind) << "," << format_number(roc.auc) << "," << format_number(pr.auc) << ","
    << format_number(prevalence) << "," << format_number(eta) << "," << cm.tp << "," << cm.fp << "," << cm.fn << ","
    << cm.tn << "\n";
  write_text(dir / (base + "_metrics.csv"), m.str());
  write_annotation_csv(dir / (name + "_mask.csv"), in.mask);
  out << name << " " << to_string(sc.kind) << ": AUC_ROC " << fixed(roc.auc) << ", AUC_PR " << fixed(pr.auc)
      << ", eta " << format_number(eta) << " (TP " << cm.tp << ", FP " << cm.fp << ", FN " << cm.fn << ")\n";
  return {roc.auc, pr.auc};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Manifest rows: code,image,mask[,source_image,source_mask[,library_index]]; paths relative to the manifest.
int cmd_detect_manifest(const DetectCmd& c, const SpectralLibrary* lib, std::ostream& out, std::ostream& err) {
  const fs::path manifest(c.manifest);
  const auto base = manifest.parent_path();
  std::istringstream text(read_text_file(manifest));
  const auto dir = make_out_dir(c.out);
  auto rel = [&](const std::string& p) { return p.empty() ? p : (fs::path(p).is_absolute() ? p : (base / p).string()); };

  std::vector<SummaryRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(text, line)) {
    if (line.empty() || line.front() == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv_line(line);
    if (header && !f.empty() && f[0] == "code") {
      header = false;
      continue;
    }
    header = false;
    if (f.size() < 3) throw Error(ErrorCode::InvalidConfig, "detect", "manifest row needs code,image,mask: " + line);
    f.resize(6);
    const auto in = load_inputs(rel(f[1]), rel(f[2]), rel(f[3]), rel(f[4]), c.prep, err);
    DetectCmd row_cmd = c;
    if (!f[5].empty()) row_cmd.library_index = static_cast<int>(parse_u64(f[5], "manifest library_index"));
    const bool have_source = in.source_cube.has_value();
    const bool have_library = lib != nullptr;

    SummaryRow row{f[0], {}, {}, {}, {}};
    auto run = [&](ScenarioKind kind) {
      return run_one(f[0], make_scenario(kind, row_cmd, lib, have_source), in, lib, row_cmd, dir, out).auc_pr;
    };
    row.ideal_mf = run(ScenarioKind::IdealMF);
    if (have_source) row.inductive_mf = run(ScenarioKind::InductiveMF);
    if (have_library) row.library_mf = run(ScenarioKind::LibraryMF);
    if (have_library || have_source) row.two_stage = run(ScenarioKind::TwoStage);
    rows.push_back(std::move(row));
  }
  const auto table = format_summary_table(rows);
  write_text(dir / "summary.csv", table);
  out << table;
  return 0;
}

int cmd_detect(const DetectCmd& c, std::ostream& out, std::ostream& err) {
  std::optional<SpectralLibrary> lib;
  if (!c.library.empty()) lib = read_spectral_library(c.library);
  const SpectralLibrary* lib_ptr = lib ? &*lib : nullptr;
  if (!c.manifest.empty()) return cmd_detect_manifest(c, lib_ptr, out, err);
  if (c.image.empty() || c.mask.empty()) {
    throw Error(ErrorCode::InvalidConfig, "detect", "an image and --mask are required (or --manifest)");
  }
  const auto in = load_inputs(c.image, c.mask, c.source_image, c.source_mask, c.prep, err);
  const auto dir = make_out_dir(c.out);
  const auto name = c.name.empty() ? stem_of(c.image) : c.name;
  const auto sc = make_scenario(parse_scenario_kind(c.scenario), c, lib_ptr, in.source_cube.has_value());
  run_one(name, sc, in, lib_ptr, c, dir, out);
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateCmd {
  std::string scores, mask, uncertain = "exclude", prevalence = "auto", out = ".", name;
  int target_class = kBloodClass;
};

int cmd_evaluate(const EvaluateCmd& c, std::ostream& out) {
  const auto scores = read_score_map(c.scores);
  const auto mask = read_annotation(c.mask, scores.lines, scores.samples);
  const auto truth = make_truth(mask, static_cast<std::uint8_t>(c.target_class), parse_policy(c.uncertain));
  const auto roc = roc_curve(scores, truth);
  const auto pr = pr_curve(scores, truth);
  const double prevalence = resolve_prevalence(c.prevalence, truth);
  const double eta = threshold_at_prevalence(scores, truth, prevalence);
  const auto cm = confusion_at_threshold(scores, truth, eta);
  const auto dir = make_out_dir(c.out);
  const auto name = c.name.empty() ? stem_of(c.scores) : c.name;
  write_curve_csv(dir / (name + "_pr.csv"), pr);
  write_curve_csv(dir / (name + "_roc.csv"), roc);
  write_detection_png(dir / (name + "_detection.png"), detection_map(scores, truth, eta));
  std::ostringstream m;
  m << "auc_roc,auc_pr,prevalence,eta,tp,fp,fn,tn\n"
    << format_number(roc.auc) << "," << format_number(pr.auc) << "," << format_number(prevalence) << ","
    << format_number(eta) << "," << cm.tp << "," << cm.fp << "," << cm.fn << "," << cm.tn << "\n";
  write_text(dir / (name + "_metrics.csv"), m.str());
  out << name << ": AUC_ROC " << fixed(roc.auc) << ", AUC_PR " << fixed(pr.auc) << ", eta " << format_number(eta)
      << " (TP " << cm.tp << ", FP " << cm.fp << ", FN " << cm.fn << ", TN " << cm.tn << ")\n";
  return 0;
}

// ---------------------------------------------------------------- sweeps

struct SweepNCmd {
  std::string image, mask, library, source_image, source_mask, uncertain = "exclude", out;
  std::optional<int> library_index;
  std::vector<std::string> n_values{"1000"};
  unsigned threads = 1;
  PrepOptions prep;
};

int cmd_sweep_n(const SweepNCmd& c, std::ostream& out, std::ostream& err) {
  std::optional<SpectralLibrary> lib;
  if (!c.library.empty()) lib = read_spectral_library(c.library);
  if (!lib && c.source_image.empty()) {
    throw Error(ErrorCode::InvalidConfig, "sweep-n", "a seed template needs --library or --source-image");
  }
  const auto in = load_inputs(c.image, c.mask, c.source_image, c.source_mask, c.prep, err);
  DetectCmd dc;
  dc.library_index = c.library_index;
  const auto sc = make_scenario(ScenarioKind::TwoStage, dc, lib ? &*lib : nullptr, in.source_cube.has_value());
  ScenarioSources sources{in.source_cube ? &*in.source_cube : nullptr, in.source_mask ? &*in.source_mask : nullptr,
                          lib ? &*lib : nullptr};
  const auto mu_t = resolve_template(sc, in.cube, &in.mask, sources);
  const auto truth = make_truth(in.mask, kBloodClass, parse_policy(c.uncertain));
  std::vector<NRule> rules;
  for (const auto& v : c.n_values) rules.push_back(NRule::parse(v));
  const auto rows = sweep_n(in.cube.pixels(), truth.labels, mu_t.vec(), rules, Parallel{c.threads});
  const auto table = format_n_table(rows);
  if (!c.out.empty()) {
    if (const auto parent = fs::path(c.out).parent_path(); !parent.empty()) make_out_dir(parent.string());
    write_text(c.out, table);
  }
  out << table;
  return 0;
}

struct SweepTCmd {
  std::string scene, out, n_rule = "1000";
  std::vector<std::size_t> t_values{200, 1000, 5000, 20000};
  std::size_t repetitions = kSweepRepetitions;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

int cmd_sweep_t(const SweepTCmd& c, std::ostream& out) {
  if (c.t_values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep-t", "--t needs at least one value");
  const std::size_t t_max = *std::max_element(c.t_values.begin(), c.t_values.end());
  SceneSpec spec = c.scene.empty() ? reference_scene(200, 200, 16, t_max, 0.15, c.seed.value_or(1))
                                   : parse_scene_spec(read_text_file(c.scene));
  if (c.seed) spec.seed = *c.seed;
  spec.target_pixel_count = std::max(spec.target_pixel_count, t_max);
  const auto rows = sweep_target_size(spec, c.t_values, NRule::parse(c.n_rule), c.repetitions, Parallel{c.threads});
  const auto table = format_target_size_table(rows);
  if (!c.out.empty()) {
    if (const auto parent = fs::path(c.out).parent_path(); !parent.empty()) make_out_dir(parent.string());
    write_text(c.out, table);
  }
  out << table;
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthCmd {
  std::string scene, out = ".", name = "synth";
  std::size_t lines = 100, samples = 100, bands = 16, targets = 500;
  double perturbation = 0.0;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthCmd& c, const CLI::App& cmd, std::ostream& out) {
  SceneSpec spec = c.scene.empty()
                       ? reference_scene(c.lines, c.samples, c.bands, c.targets, c.perturbation, c.seed)
                       : parse_scene_spec(read_text_file(c.scene));
  if (!c.scene.empty()) {
    const bool reshaped = cmd.count("--lines") || cmd.count("--samples") || cmd.count("--bands");
    if (reshaped && (cmd.count("--bands") && c.bands != spec.bands)) {
      throw Error(ErrorCode::InvalidConfig, "synth", "--bands conflicts with the scene file");
    }
    if (cmd.count("--lines")) spec.lines = c.lines;
    if (cmd.count("--samples")) spec.samples = c.samples;
    if (cmd.count("--targets")) spec.target_pixel_count = c.targets;
    if (cmd.count("--perturbation")) spec.template_perturbation = c.perturbation;
    if (cmd.count("--seed")) spec.seed = c.seed;
  }
  const auto scene = generate_scene(spec);
  const auto dir = make_out_dir(c.out);
  write_cube(dir / (c.name + ".hdr"), scene.cube, make_header(scene.cube));
  write_annotation_csv(dir / (c.name + "_mask.csv"), scene.mask);
  SpectralLibrary lib;
  lib.entries.push_back({1, "true", scene.true_template});
  lib.entries.push_back({2, "detector", scene.detector_template});
  write_text(dir / (c.name + "_library.csv"), format_spectral_library(lib));
  write_text(dir / (c.name + "_scene.txt"), format_scene_spec(spec));
  out << c.name << ": " << spec.samples << "×" << spec.lines << "×" << spec.bands << ", "
      << scene.target_pixels.size() << " target pixels, seed " << spec.seed << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportCmd {
  std::string dir, uncertain = "exclude", prevalence = "auto";
};

int cmd_report(const ReportCmd& c, std::ostream& out) {
  const fs::path dir(c.dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "report", "not a directory: " + c.dir);

  // image name -> scenario -> score-map header
  std::map<std::string, std::map<std::string, fs::path>> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".hdr") continue;
    const auto stem = entry.path().stem().string();
    for (const auto& s : kScenarioNames) {
      const auto suffix = "_" + s;
      if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
        runs[stem.substr(0, stem.size() - suffix.size())][s] = entry.path();
      }
    }
  }
  if (runs.empty()) throw Error(ErrorCode::IoError, "report", "no detection outputs in " + c.dir);
  for (const auto& [image, scenarios] : runs) {
    if (scenarios.contains("two-stage") && !scenarios.contains("ideal-mf")) {
      throw Error(ErrorCode::IoError, "report", image + " has a two-stage run but no ideal-mf run to compare against");
    }
  }

  for (const auto& [image, scenarios] : runs) {
    const auto mask_path = dir / (image + "_mask.csv");
    if (!fs::exists(mask_path)) throw Error(ErrorCode::IoError, "report", "missing " + mask_path.string());
    std::map<std::string, ScoreMap> maps;
    for (const auto& [s, path] : scenarios) maps[s] = read_score_map(path);
    const auto& first = maps.begin()->second;
    const auto mask = read_annotation(mask_path, first.lines, first.samples);
    const auto truth = make_truth(mask, kBloodClass, parse_policy(c.uncertain));
    const double prevalence = resolve_prevalence(c.prevalence, truth);

    std::vector<NamedCurve> all_pr, all_roc;
    for (const auto& [s, scores] : maps) {
      const auto pr_csv = dir / (image + "_" + s + "_pr.csv");
      const auto roc_csv = dir / (image + "_" + s + "_roc.csv");
      const Curve pr = fs::exists(pr_csv) ? read_curve_csv(pr_csv, CurveKind::PR) : pr_curve(scores, truth);
      const Curve roc = fs::exists(roc_csv) ? read_curve_csv(roc_csv, CurveKind::ROC) : roc_curve(scores, truth);
      const auto label = s + " (AUC " + fixed(pr.auc, 2) + ")";
      write_curves_svg(dir / (image + "_" + s + "_pr.svg"), {{label, pr}}, CurveKind::PR, image + " " + s);
      write_curves_svg(dir / (image + "_" + s + "_roc.svg"), {{s + " (AUC " + fixed(roc.auc, 2) + ")", roc}},
                       CurveKind::ROC, image + " " + s);
      all_pr.push_back({label, pr});
      all_roc.push_back({s + " (AUC " + fixed(roc.auc, 2) + ")", roc});
      const double eta = threshold_at_prevalence(scores, truth, prevalence);
      write_detection_png(dir / (image + "_" + s + "_detection.png"), detection_map(scores, truth, eta));
      out << image << " " << s << ": AUC_PR " << fixed(pr.auc) << ", AUC_ROC " << fixed(roc.auc) << "\n";
    }
    if (maps.size() > 1) {
      write_curves_svg(dir / (image + "_pr.svg"), all_pr, CurveKind::PR, image);
      write_curves_svg(dir / (image + "_roc.svg"), all_roc, CurveKind::ROC, image);
    }
    if (maps.contains("two-stage")) {
      const auto cmp = compare_map(maps.at("two-stage"), maps.at("ideal-mf"), truth, prevalence);
      write_comparison_png(dir / (image + "_compare.png"), cmp);
      const auto h = cmp.histogram();
      out << image << " compare:";
      for (std::size_t code = 1; code < h.size(); ++code) out << " " << code << "=" << h[code];
      out << "\n";
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral blood detection pipeline", "hsdetect"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults ([detect] n-pixels = 750, ...)");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Summarize an ENVI header");
  inspect->add_option("header", inspect_path, "Header file")->required();

  PreprocessCmd pre;
  auto* preprocess_cmd = app.add_subcommand("preprocess", "Reflectance-correct, drop bands and median-normalize a cube");
  preprocess_cmd->add_option("image", pre.image, "Image header")->required()->check(CLI::ExistingFile);
  preprocess_cmd->add_option("--out", pre.out, "Output directory");
  preprocess_cmd->add_option("--name", pre.name, "Output name (default: image stem)");
  preprocess_cmd->add_option("--panel", pre.panel, "White-reference panel cube")->check(CLI::ExistingFile);
  preprocess_cmd->add_option("--panel-reflectance", pre.panel_reflectance, "Panel reflectance (library CSV)")
      ->check(CLI::ExistingFile);
  preprocess_cmd->add_option("--panel-index", pre.panel_index, "Entry of the panel reflectance file");
  add_prep_flags(preprocess_cmd, pre.prep);

  DetectCmd det;
  auto* detect = app.add_subcommand("detect", "Run a detection scenario and score it");
  detect->add_option("image", det.image, "Image header")->check(CLI::ExistingFile);
  detect->add_option("--mask", det.mask, "Annotation (CSV or flat u8)")->check(CLI::ExistingFile);
  detect->add_option("--manifest", det.manifest, "Batch CSV: code,image,mask[,source_image,source_mask[,library_index]]")
      ->check(CLI::ExistingFile);
  detect->add_option("--scenario", det.scenario, "Scenario")->check(CLI::IsMember(kScenarioNames));
  detect->add_option("--n-pixels", det.n_pixels, "Pixels averaged by the two-stage detector")->check(CLI::PositiveNumber);
  detect->add_option("--library", det.library, "Spectral library CSV")->check(CLI::ExistingFile);
  detect->add_option("--library-index", det.library_index, "Library entry (default: first)");
  detect->add_option("--source-image", det.source_image, "Template source image header")->check(CLI::ExistingFile);
  detect->add_option("--source-mask", det.source_mask, "Template source annotation")->check(CLI::ExistingFile);
  detect->add_option("--seed-template", det.seed_template, "Two-stage seed: library or source")
      ->check(CLI::IsMember({"library", "source"}));
  detect->add_option("--target-class", det.target_class, "Target class label")->check(CLI::Range(0, 8));
  detect->add_flag("--uncertain-in-template", det.uncertain_in_template,
                   "Count uncertain-blood pixels into image-derived templates");
  detect->add_option("--uncertain", det.uncertain, "Uncertain-blood pixels in evaluation")
      ->check(CLI::IsMember({"exclude", "positive", "negative"}));
  detect->add_option("--prevalence", det.prevalence, "Prevalence for the threshold: auto or a fraction");
  detect->add_option("--name", det.name, "Output name (default: image stem)");
  detect->add_option("--out", det.out, "Output directory");
  add_threads(detect, det.threads);
  add_prep_flags(detect, det.prep);

  EvaluateCmd ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a saved score map against an annotation");
  evaluate->add_option("scores", ev.scores, "Score-map header")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--mask", ev.mask, "Annotation")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--target-class", ev.target_class, "Target class label")->check(CLI::Range(0, 8));
  evaluate->add_option("--uncertain", ev.uncertain, "Uncertain-blood pixels in evaluation")
      ->check(CLI::IsMember({"exclude", "positive", "negative"}));
  evaluate->add_option("--prevalence", ev.prevalence, "Prevalence for the threshold: auto or a fraction");
  evaluate->add_option("--name", ev.name, "Output name (default: score-map stem)");
  evaluate->add_option("--out", ev.out, "Output directory");

  SweepNCmd sn;
  auto* sweep_n_cmd = app.add_subcommand("sweep-n", "Two-stage AUC(PR) for several N");
  sweep_n_cmd->add_option("image", sn.image, "Image header")->required()->check(CLI::ExistingFile);
  sweep_n_cmd->add_option("--mask", sn.mask, "Annotation")->required()->check(CLI::ExistingFile);
  sweep_n_cmd->add_option("--n", sn.n_values, "N values: counts or percentages of the blood class (750,1000,10%)")
      ->delimiter(',');
  sweep_n_cmd->add_option("--library", sn.library, "Spectral library CSV")->check(CLI::ExistingFile);
  sweep_n_cmd->add_option("--library-index", sn.library_index, "Library entry (default: first)");
  sweep_n_cmd->add_option("--source-image", sn.source_image, "Seed template source image")->check(CLI::ExistingFile);
  sweep_n_cmd->add_option("--source-mask", sn.source_mask, "Seed template source annotation")->check(CLI::ExistingFile);
  sweep_n_cmd->add_option("--uncertain", sn.uncertain, "Uncertain-blood pixels in evaluation")
      ->check(CLI::IsMember({"exclude", "positive", "negative"}));
  sweep_n_cmd->add_option("--out", sn.out, "Output CSV");
  add_threads(sweep_n_cmd, sn.threads);
  add_prep_flags(sweep_n_cmd, sn.prep);

  SweepTCmd st;
  auto* sweep_t = app.add_subcommand("sweep-t", "Two-stage AUC(PR) against the number of target pixels");
  sweep_t->add_option("--scene", st.scene, "Scene spec (default: reference 200x200 scene)")->check(CLI::ExistingFile);
  sweep_t->add_option("--t", st.t_values, "Target sizes")->delimiter(',');
  sweep_t->add_option("--n", st.n_rule, "N rule: a count or a percentage of T");
  sweep_t->add_option("--repetitions", st.repetitions, "Random draws per T")->check(CLI::PositiveNumber);
  sweep_t->add_option("--seed", st.seed, "Seed (overrides the scene file)");
  sweep_t->add_option("--out", st.out, "Output CSV");
  add_threads(sweep_t, st.threads);

  SynthCmd sy;
  auto* synth = app.add_subcommand("synth", "Generate an annotated synthetic scene");
  synth->add_option("--scene", sy.scene, "Scene spec")->check(CLI::ExistingFile);
  synth->add_option("--lines", sy.lines)->check(CLI::PositiveNumber);
  synth->add_option("--samples", sy.samples)->check(CLI::PositiveNumber);
  synth->add_option("--bands", sy.bands)->check(CLI::PositiveNumber);
  synth->add_option("--targets", sy.targets, "Implanted target pixels");
  synth->add_option("--perturbation", sy.perturbation, "Relative detector-template distortion");
  synth->add_option("--seed", sy.seed);
  synth->add_option("--name", sy.name, "Output name");
  synth->add_option("--out", sy.out, "Output directory");

  ReportCmd rep;
  auto* report = app.add_subcommand("report", "Render curves and comparison maps from detect outputs");
  report->add_option("dir", rep.dir, "Directory written by detect")->required();
  report->add_option("--uncertain", rep.uncertain, "Uncertain-blood pixels in evaluation")
      ->check(CLI::IsMember({"exclude", "positive", "negative"}));
  report->add_option("--prevalence", rep.prevalence, "Prevalence for the threshold: auto or a fraction");

  std::vector<const char*> argv{"hsdetect"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    // A bad `inspect` invocation is still a configuration error.
    return code == 0 ? 0 : 2;
  }

  try {
    if (*inspect) return cmd_inspect(inspect_path, out, err);
    if (*preprocess_cmd) return cmd_preprocess(pre, out, err);
    if (*detect) return cmd_detect(det, out, err);
    if (*evaluate) return cmd_evaluate(ev, out);
    if (*sweep_n_cmd) return cmd_sweep_n(sn, out, err);
    if (*sweep_t) return cmd_sweep_t(st, out);
    if (*synth) return cmd_synth(sy, *synth, out);
    if (*report) return cmd_report(rep, out);
  } catch (const Error& e) {
    err << "hsdetect: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "hsdetect: IoError: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "hsdetect: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace hsd
