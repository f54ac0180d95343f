#include "hilite/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hilite/diffusion.hpp"
#include "hilite/error.hpp"
#include "hilite/image_io.hpp"
#include "hilite/metrics.hpp"
#include "hilite/prior.hpp"
#include "hilite/pyramid.hpp"
#include "hilite/qc.hpp"
#include "hilite/rng.hpp"
#include "json.hpp"

namespace hilite::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct RunReport {
  RunReport() = default;
  explicit RunReport(std::string name, std::vector<std::string> in = {})
      : subcommand(std::move(name)), inputs(std::move(in)) {}

  std::string subcommand;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json metrics = json::object();
  std::optional<std::uint64_t> seed;

  json to_json(double elapsed) const {
    json j = json::object();
    j["subcommand"] = subcommand;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["metrics"] = metrics;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["elapsed"] = elapsed;
    return j;
  }
};

/// "inf" for an infinite PSNR, the number otherwise.
json db_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw Error(ErrorCode::UnwritablePath, "cannot create output directory " + dir);
  }
  return p;
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

const CLI::Validator kPercentile(
    [](std::string& v) -> std::string {
      double x = 0.0;
      if (!CLI::detail::lexical_cast(v, x) || !(x >= 0.0 && x < 100.0))
        return "percentile must lie in [0, 100), got " + v;
      return {};
    },
    "FLOAT in [0, 100)");

int default_jobs() {
  if (const char* env = std::getenv("HILITE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 0 && v < 4096) return static_cast<int>(v);
  }
  return 0;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

template <typename Fn>
void parallel_for_each(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> failures(n);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (jobs != 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

// ------------------------------------------------------------------ options

struct PyramidOpts {
  std::string input;
  std::string out;
  int depth = kDefaultPyramidDepth;
};

struct PriorOpts {
  std::string highlight, gt, out;
  double alpha = 80.0;
  bool no_stretch = false;
  int bins = 256;
  int base_depth = 0;
};

struct MaskEvalOpts {
  std::string dir, highlight, gt, mask, out;
  double alpha = 80.0;
  int bins = 256;
  int base_depth = 0;
  int jobs = 0;
};

struct MetricsOpts {
  std::string a, b, out;
  int jobs = 0;
};

struct QcOpts {
  std::string input, out;
  int dilation = 5;
  int max_shift = 8;
  double residual_tol = 0.02;
  double alpha = 80.0;
  double fraction = 0.1;
  std::vector<std::string> strata{"category", "light", "language", "angle",
                                  "environment"};
  std::uint64_t seed = 0;
  int jobs = 0;
};

struct DiffusionOpts {
  std::string input, out;
  std::uint64_t seed = 0;
  int depth = kDefaultPyramidDepth;
  int steps = 10;
  int total_steps = kDefaultDiffusionSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
};

// ----------------------------------------------------------------- handlers

RunReport pyramid_decompose(const PyramidOpts& o) {
  RunReport r("pyramid decompose", {o.input});
  const ImageBuffer img = load_image(o.input);
  const Pyramid pyr = decompose(img, o.depth);
  const fs::path out = prepare_out(o.out);
  export_pyramid(pyr, out);
  for (int i = 0; i < pyr.depth(); ++i)
    r.outputs.push_back((out / ("high_" + std::to_string(i) + ".png")).string());
  r.outputs.push_back((out / "base.png").string());
  r.outputs.push_back((out / "pyramid.json").string());
  r.metrics["depth"] = pyr.depth();
  r.metrics["base_width"] = pyr.base.width();
  r.metrics["base_height"] = pyr.base.height();
  return r;
}

RunReport pyramid_reconstruct(const PyramidOpts& o) {
  RunReport r("pyramid reconstruct", {o.input});
  const Pyramid pyr = import_pyramid(o.input);
  const ImageBuffer img = reconstruct(pyr, /*clamp_to_unit=*/true);
  const fs::path out = prepare_out(o.out);
  const fs::path file = out / "reconstructed.png";
  save_image(img, file, BitDepth::Sixteen);
  r.outputs.push_back(file.string());
  r.metrics["depth"] = pyr.depth();
  r.metrics["width"] = img.width();
  r.metrics["height"] = img.height();
  return r;
}

PriorConfig prior_config(double alpha, bool stretch, int bins) {
  PriorConfig cfg;
  cfg.alpha_percentile = alpha;
  cfg.apply_stretch = stretch;
  cfg.bins = bins;
  return cfg;
}

PriorResult run_prior(const ImageBuffer& hl, const ImageBuffer& gt,
                      const PriorConfig& cfg, int base_depth) {
  return base_depth > 0 ? generate_prior_at_base(hl, gt, base_depth, cfg)
                        : generate_prior(hl, gt, cfg);
}

RunReport prior_gen(const PriorOpts& o) {
  RunReport r("prior gen", {o.highlight, o.gt});
  const PriorConfig cfg = prior_config(o.alpha, !o.no_stretch, o.bins);
  const ImageBuffer hl = load_image(o.highlight);
  const ImageBuffer gt = load_image(o.gt);
  const PriorResult prior = run_prior(hl, gt, cfg, o.base_depth);
  const fs::path out = prepare_out(o.out);

  const fs::path soft = out / "soft_mask.png";
  const fs::path binary = out / "binary_mask.png";
  const fs::path record = out / "prior.json";
  save_image(to_buffer(prior.soft), soft, BitDepth::Sixteen);
  save_image(to_buffer(prior.binary), binary, BitDepth::Eight);

  json j = json::object();
  j["threshold"] = prior.threshold;
  j["alpha_percentile"] = o.alpha;
  j["stretch_applied"] = cfg.apply_stretch;
  write_json_file(j, record);

  r.outputs = {soft.string(), binary.string(), record.string()};
  std::size_t set = std::count(prior.binary.data.begin(), prior.binary.data.end(), 1);
  r.metrics["threshold"] = prior.threshold;
  r.metrics["mask_fraction"] =
      static_cast<double>(set) / static_cast<double>(prior.binary.data.size());
  return r;
}

struct EvalTriple {
  std::string name;
  fs::path highlight, gt, mask;
};

std::vector<EvalTriple> shiq_triples(const fs::path& dir) {
  // SHIQ naming: <n>_A.png input, <n>_D.png diffuse, <n>_T.png highlight mask.
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::MissingFile, "no such directory: " + dir.string());
  }
  std::vector<EvalTriple> triples;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string stem = entry.path().stem().string();
    if (!entry.is_regular_file() || !stem.ends_with("_A")) continue;
    const std::string base = stem.substr(0, stem.size() - 2);
    const std::string ext = entry.path().extension().string();
    EvalTriple t{base, entry.path(), dir / (base + "_D" + ext), dir / (base + "_T" + ext)};
    if (fs::exists(t.gt) && fs::exists(t.mask)) triples.push_back(std::move(t));
  }
  std::sort(triples.begin(), triples.end(),
            [](const EvalTriple& a, const EvalTriple& b) { return a.name < b.name; });
  if (triples.empty()) {
    throw Error(ErrorCode::EmptyInput,
                "no <n>_A/<n>_D/<n>_T triples found in " + dir.string());
  }
  return triples;
}

BinaryMask binarize_truth(const ImageBuffer& img) {
  const GrayImage g = to_grayscale(img);
  BinaryMask m(g.width, g.height, 0);
  for (std::size_t i = 0; i < g.data.size(); ++i) m.data[i] = g.data[i] > 0.5f;
  return m;
}

RunReport maskeval(const MaskEvalOpts& o) {
  RunReport r("maskeval");
  std::vector<EvalTriple> triples;
  if (!o.dir.empty()) {
    triples = shiq_triples(o.dir);
    r.inputs.push_back(o.dir);
  } else {
    triples.push_back({fs::path(o.highlight).stem().string(), o.highlight, o.gt, o.mask});
    r.inputs = {o.highlight, o.gt, o.mask};
  }

  struct Variant {
    const char* name;
    bool residual;
    bool stretch;
  };
  static constexpr Variant kVariants[] = {
      {"input_otsu", false, false},
      {"residual_otsu", true, false},
      {"residual_stretch_otsu", true, true},
  };
  constexpr std::size_t kCount = std::size(kVariants);
  std::vector<std::array<ConfusionCounts, kCount>> counts(triples.size());

  parallel_for_each(triples.size(), o.jobs, [&](std::size_t i) {
    const ImageBuffer hl = load_image(triples[i].highlight);
    const ImageBuffer gt = load_image(triples[i].gt);
    ImageBuffer mask_img = load_image(triples[i].mask);
    // Priors at the pyramid base are scored against the mask at that level.
    for (int d = 0; d < o.base_depth; ++d) mask_img = gaussian_down(mask_img);
    const BinaryMask truth = binarize_truth(mask_img);
    for (std::size_t v = 0; v < kCount; ++v) {
      const PriorResult p =
          kVariants[v].residual
              ? run_prior(hl, gt, prior_config(o.alpha, kVariants[v].stretch, o.bins),
                          o.base_depth)
              : input_otsu_baseline(
                    o.base_depth > 0 ? decompose(hl, o.base_depth).base : hl, o.bins);
      if (!p.binary.same_dims(truth)) {
        throw Error(ErrorCode::DimensionMismatch,
                    "mask " + triples[i].mask.string() + " does not match the prior size");
      }
      counts[i][v] = mask_confusion(p.binary, truth);
    }
  });

  json rows = json::array();
  for (std::size_t v = 0; v < kCount; ++v) {
    ConfusionCounts pooled;
    double acc_sum = 0.0, ber_sum = 0.0;
    std::size_t ber_n = 0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const ConfusionCounts& c = counts[i][v];
      pooled += c;
      acc_sum += accuracy(c);
      if (c.tp + c.fn > 0 && c.tn + c.fp > 0) {
        ber_sum += ber(c);
        ++ber_n;
      }
    }
    const std::string prefix = kVariants[v].name;
    r.metrics[prefix + "_acc_mean"] = acc_sum / static_cast<double>(triples.size());
    r.metrics[prefix + "_ber_mean"] =
        ber_n ? json(ber_sum / static_cast<double>(ber_n)) : json(nullptr);
    r.metrics[prefix + "_acc_pooled"] = accuracy(pooled);
    const bool pooled_defined = pooled.tp + pooled.fn > 0 && pooled.tn + pooled.fp > 0;
    r.metrics[prefix + "_ber_pooled"] = pooled_defined ? json(ber(pooled)) : json(nullptr);
  }
  r.metrics["images"] = triples.size();

  if (!o.out.empty()) {
    const fs::path out = prepare_out(o.out);
    const fs::path per_image = out / "maskeval.jsonl";
    std::ofstream f(per_image, std::ios::binary);
    if (!f) throw Error(ErrorCode::UnwritablePath, "cannot write " + per_image.string());
    for (std::size_t i = 0; i < triples.size(); ++i) {
      json j = json::object();
      j["name"] = triples[i].name;
      for (std::size_t v = 0; v < kCount; ++v) {
        const ConfusionCounts& c = counts[i][v];
        json cj = json::object();
        cj["tp"] = c.tp;
        cj["fp"] = c.fp;
        cj["tn"] = c.tn;
        cj["fn"] = c.fn;
        cj["acc"] = accuracy(c);
        cj["ber"] = (c.tp + c.fn > 0 && c.tn + c.fp > 0) ? json(ber(c)) : json(nullptr);
        j[kVariants[v].name] = cj;
      }
      f << j.dump() << '\n';
    }
    r.outputs.push_back(per_image.string());
  }
  return r;
}

json compare_pair(const ImageBuffer& a, const ImageBuffer& b) {
  json m = json::object();
  m["psnr_db"] = db_value(psnr(a, b));
  m["ssim"] = ssim(a, b);
  m["rmse_255"] = rmse(a, b, RmseScale::Byte);
  return m;
}

RunReport metrics_cmp(const MetricsOpts& o) {
  RunReport r("metrics cmp", {o.a, o.b});
  const ImageBuffer a = load_image(o.a);
  const ImageBuffer b = load_image(o.b);
  r.metrics = compare_pair(a, b);
  if (!o.out.empty()) {
    const fs::path file = prepare_out(o.out) / "metrics.json";
    write_json_file(r.metrics, file);
    r.outputs.push_back(file.string());
  }
  return r;
}

std::string csv_number(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  std::ostringstream s;
  s.precision(10);
  s << v.get<double>();
  return s.str();
}

RunReport metrics_batch(const MetricsOpts& o) {
  RunReport r("metrics batch", {o.a, o.b});
  for (const auto& dir : {o.a, o.b}) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw Error(ErrorCode::MissingFile, "no such directory: " + dir);
    }
  }
  std::vector<std::string> names;
  std::size_t unmatched = 0;
  for (const auto& entry : fs::directory_iterator(o.a)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string name = entry.path().filename().string();
    if (fs::exists(fs::path(o.b) / name)) names.push_back(name);
    else ++unmatched;
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw Error(ErrorCode::EmptyInput, "no image file names shared by " + o.a +
                                           " and " + o.b);
  }

  std::vector<json> rows(names.size());
  parallel_for_each(names.size(), o.jobs, [&](std::size_t i) {
    json row = json::object();
    row["name"] = names[i];
    const ImageBuffer a = load_image(fs::path(o.a) / names[i]);
    const ImageBuffer b = load_image(fs::path(o.b) / names[i]);
    const json m = compare_pair(a, b);
    row.update(m);
    rows[i] = std::move(row);
  });

  double psnr_sum = 0.0, ssim_sum = 0.0, rmse_sum = 0.0;
  for (const json& row : rows) {
    const json& p = row["psnr_db"];
    psnr_sum += p.is_string() ? std::numeric_limits<double>::infinity()
                              : p.get<double>();
    ssim_sum += row["ssim"].get<double>();
    rmse_sum += row["rmse_255"].get<double>();
  }
  const double n = static_cast<double>(rows.size());
  r.metrics["pairs"] = rows.size();
  r.metrics["unmatched"] = unmatched;
  r.metrics["psnr_db"] = db_value(psnr_sum / n);
  r.metrics["ssim"] = ssim_sum / n;
  r.metrics["rmse_255"] = rmse_sum / n;

  const fs::path out = prepare_out(o.out);
  const fs::path jsonl = out / "metrics.jsonl";
  const fs::path csv = out / "metrics.csv";
  std::ofstream fj(jsonl, std::ios::binary), fc(csv, std::ios::binary);
  if (!fj || !fc) throw Error(ErrorCode::UnwritablePath, "cannot write into " + o.out);
  fc << "name,psnr_db,ssim,rmse_255\n";
  for (const json& row : rows) {
    fj << row.dump() << '\n';
    fc << row["name"].get<std::string>() << ',' << csv_number(row["psnr_db"]) << ','
       << csv_number(row["ssim"]) << ',' << csv_number(row["rmse_255"]) << '\n';
  }
  fc << "mean," << csv_number(r.metrics["psnr_db"]) << ','
     << csv_number(r.metrics["ssim"]) << ',' << csv_number(r.metrics["rmse_255"]) << '\n';
  r.outputs = {jsonl.string(), csv.string()};
  return r;
}

RunReport qc_scan(const QcOpts& o) {
  RunReport r("qc scan", {o.input});
  const qc::ScanResult scan = qc::scan_manifest(o.input);
  const fs::path out = prepare_out(o.out);
  const fs::path csv = out / "manifest.csv", jsonl = out / "manifest.jsonl",
                 skipped = out / "skipped.jsonl";
  qc::write_manifest_csv(scan.manifest, csv);
  qc::write_manifest_jsonl(scan.manifest, jsonl);
  std::ofstream fs_skipped(skipped, std::ios::binary);
  if (!fs_skipped) throw Error(ErrorCode::UnwritablePath, "cannot write " + skipped.string());
  for (const qc::SkippedEntry& s : scan.skipped) {
    json j = json::object();
    j["path"] = s.path.generic_string();
    j["reason"] = s.reason;
    fs_skipped << j.dump() << '\n';
  }
  r.outputs = {csv.string(), jsonl.string(), skipped.string()};
  r.metrics["records"] = scan.manifest.records.size();
  r.metrics["skipped"] = scan.skipped.size();
  return r;
}

RunReport qc_check(const QcOpts& o) {
  RunReport r("qc check", {o.input});
  const qc::Manifest m = qc::read_manifest(o.input);
  qc::AlignmentConfig cfg;
  cfg.dilation = o.dilation;
  cfg.max_shift = o.max_shift;
  cfg.residual_tol = o.residual_tol;
  cfg.prior.alpha_percentile = o.alpha;
  const qc::FilterResult res = qc::filter_aligned(m, cfg, o.jobs);

  const fs::path out = prepare_out(o.out);
  const fs::path all = out / "alignment.jsonl", rejected = out / "rejected.jsonl",
                 kept_csv = out / "kept.csv", kept_jsonl = out / "kept.jsonl";
  qc::write_reports_jsonl(res.reports, all);
  qc::write_reports_jsonl(res.rejected, rejected);
  qc::write_manifest_csv(res.kept, kept_csv);
  qc::write_manifest_jsonl(res.kept, kept_jsonl);
  r.outputs = {all.string(), rejected.string(), kept_csv.string(), kept_jsonl.string()};
  r.metrics["records"] = m.records.size();
  r.metrics["kept"] = res.kept.records.size();
  r.metrics["rejected"] = res.rejected.size();
  return r;
}

RunReport qc_sample(const QcOpts& o) {
  RunReport r("qc sample", {o.input});
  r.seed = o.seed;
  const qc::Manifest m = qc::read_manifest(o.input);
  const qc::Manifest picked = qc::stratified_sample(m, o.fraction, o.strata, o.seed);
  const fs::path out = prepare_out(o.out);
  const fs::path csv = out / "sample.csv", jsonl = out / "sample.jsonl";
  qc::write_manifest_csv(picked, csv);
  qc::write_manifest_jsonl(picked, jsonl);
  r.outputs = {csv.string(), jsonl.string()};
  r.metrics["records"] = m.records.size();
  r.metrics["selected"] = picked.records.size();
  r.metrics["fraction"] = o.fraction;
  return r;
}

RunReport diffusion_demo(const DiffusionOpts& o) {
  RunReport r("diffusion demo", {o.input});
  r.seed = o.seed;
  const ImageBuffer img = load_image(o.input);
  const DiffusionSchedule sched = linear_schedule(o.total_steps, o.beta_start, o.beta_end);
  Pyramid pyr = decompose(img, o.depth);

  // Target: the deepest high-frequency layer, conditioned on the base.
  const ImageBuffer& x0 = pyr.highs.back();
  const Conditioning y = build_conditioning(x0, pyr.base, pyr.base);
  const Denoiser oracle = [&x0](const ImageBuffer&, int, const ImageBuffer&) {
    return x0;
  };

  json steps = json::array();
  const ImageBuffer recovered = sample(
      oracle, y, sched, o.steps, o.seed,
      [&](int step, int t, const ImageBuffer& pred) {
        double max_abs = 0.0;
        const auto a = pred.data();
        const auto b = x0.data();
        for (std::size_t i = 0; i < a.size(); ++i)
          max_abs = std::max(max_abs, std::abs(static_cast<double>(a[i]) - b[i]));
        json s = json::object();
        s["step"] = step;
        s["t"] = t;
        s["max_abs_error"] = max_abs;
        s["dm_loss"] = dm_loss(x0, pred);
        steps.push_back(std::move(s));
      });

  const ImageBuffer noise = gaussian_noise(x0.width(), x0.height(), x0.channels(),
                                           Rng::mix(o.seed));
  ImageBuffer noisy_layer = forward_sample(x0, sched.steps(), noise, sched);
  for (float& v : noisy_layer.data()) v = (v + 1.0f) * 0.5f;

  pyr.highs.back() = recovered;
  const ImageBuffer rebuilt = reconstruct(pyr, /*clamp_to_unit=*/true);

  const fs::path out = prepare_out(o.out);
  const fs::path recovered_file = out / "recovered.png";
  const fs::path noisy_file = out / "noisy_layer.png";
  const fs::path report_file = out / "diffusion_report.json";
  save_image(rebuilt, recovered_file, BitDepth::Sixteen);
  save_image(clamp_unit(noisy_layer), noisy_file, BitDepth::Sixteen);

  const double final_error = steps.back()["max_abs_error"].get<double>();
  json report = json::object();
  report["seed"] = o.seed;
  report["total_steps"] = o.total_steps;
  report["n_steps"] = o.steps;
  report["depth"] = o.depth;
  report["final_max_abs_error"] = final_error;
  report["recovery_psnr_db"] = db_value(psnr(img, rebuilt));
  report["steps"] = steps;
  write_json_file(report, report_file);

  r.outputs = {recovered_file.string(), noisy_file.string(), report_file.string()};
  r.metrics["final_max_abs_error"] = final_error;
  r.metrics["recovery_psnr_db"] = report["recovery_psnr_db"];
  return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Highlight-prior, Laplacian pyramid, image metric and dataset QC toolkit",
               "hilite"};
  app.set_config("--config", "", "TOML file with option values; flags on the command line win");
  app.require_subcommand(1);
  const int env_jobs = default_jobs();

  // pyramid
  auto* pyramid = app.add_subcommand("pyramid", "Laplacian pyramid decomposition");
  pyramid->require_subcommand(1);
  PyramidOpts pyr_dec, pyr_rec;
  auto* dec = pyramid->add_subcommand("decompose", "Split an image into bands");
  dec->add_option("input", pyr_dec.input, "Input image")->required();
  dec->add_option("--depth", pyr_dec.depth, "Decomposition levels")
      ->check(CLI::PositiveNumber);
  dec->add_option("--out", pyr_dec.out, "Output directory")->required();
  auto* rec = pyramid->add_subcommand("reconstruct", "Rebuild an image from bands");
  rec->add_option("input", pyr_rec.input, "Directory written by decompose")->required();
  rec->add_option("--out", pyr_rec.out, "Output directory")->required();

  // prior
  auto* prior = app.add_subcommand("prior", "Highlight location prior");
  prior->require_subcommand(1);
  PriorOpts prior_opts;
  auto* gen = prior->add_subcommand("gen", "Soft and binary highlight masks from a pair");
  gen->add_option("highlight", prior_opts.highlight, "Image with highlights")->required();
  gen->add_option("gt", prior_opts.gt, "Highlight-free image")->required();
  gen->add_option("--alpha", prior_opts.alpha, "Stretch percentile")
      ->check(kPercentile);
  gen->add_flag("--no-stretch", prior_opts.no_stretch, "Skip contrast stretching");
  gen->add_option("--bins", prior_opts.bins, "Otsu histogram bins")->check(CLI::Range(2, 65536));
  gen->add_option("--base-depth", prior_opts.base_depth,
                  "Compute on the pyramid base at this depth (0 = full resolution)")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--out", prior_opts.out, "Output directory")->required();

  // maskeval
  MaskEvalOpts me;
  me.jobs = env_jobs;
  auto* mev = app.add_subcommand("maskeval", "ACC/BER of prior masks against ground-truth masks");
  auto* me_dir = mev->add_option("--dir", me.dir, "SHIQ-style directory of <n>_A/_D/_T images");
  auto* me_hl = mev->add_option("--highlight", me.highlight, "Image with highlights");
  auto* me_gt = mev->add_option("--gt", me.gt, "Highlight-free image");
  auto* me_mask = mev->add_option("--mask", me.mask, "Ground-truth highlight mask");
  me_hl->needs(me_gt)->needs(me_mask)->excludes(me_dir);
  me_gt->needs(me_hl);
  me_mask->needs(me_hl);
  mev->add_option("--alpha", me.alpha, "Stretch percentile")->check(kPercentile);
  mev->add_option("--bins", me.bins, "Otsu histogram bins")->check(CLI::Range(2, 65536));
  mev->add_option("--base-depth", me.base_depth, "Evaluate on the pyramid base")
      ->check(CLI::NonNegativeNumber);
  mev->add_option("--jobs", me.jobs, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  mev->add_option("--out", me.out, "Output directory for per-image results");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Full-reference image metrics");
  metrics->require_subcommand(1);
  MetricsOpts cmp_opts, batch_opts;
  batch_opts.jobs = env_jobs;
  auto* cmp = metrics->add_subcommand("cmp", "Compare two images");
  cmp->add_option("a", cmp_opts.a, "First image")->required();
  cmp->add_option("b", cmp_opts.b, "Second image")->required();
  cmp->add_option("--out", cmp_opts.out, "Optional output directory");
  auto* batch = metrics->add_subcommand("batch", "Compare same-named images in two directories");
  batch->add_option("a", batch_opts.a, "First directory")->required();
  batch->add_option("b", batch_opts.b, "Second directory")->required();
  batch->add_option("--jobs", batch_opts.jobs, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  batch->add_option("--out", batch_opts.out, "Output directory")->required();

  // qc
  auto* qc_cmd = app.add_subcommand("qc", "Dataset quality control");
  qc_cmd->require_subcommand(1);
  QcOpts scan_opts, check_opts, sample_opts;
  check_opts.jobs = env_jobs;
  auto* scan = qc_cmd->add_subcommand("scan", "Build a manifest from a labelled directory tree");
  scan->add_option("root", scan_opts.input, "Dataset root")->required();
  scan->add_option("--out", scan_opts.out, "Output directory")->required();
  auto* check = qc_cmd->add_subcommand("check", "Reject misaligned pairs");
  check->add_option("manifest", check_opts.input, "Manifest (.csv or .jsonl)")->required();
  check->add_option("--dilation", check_opts.dilation, "Mask dilation in pixels")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--max-shift", check_opts.max_shift, "Shift search radius in pixels")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--residual-tol", check_opts.residual_tol,
                    "Mean-abs residual tolerance outside the mask")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--alpha", check_opts.alpha, "Stretch percentile for the mask")
      ->check(kPercentile);
  check->add_option("--jobs", check_opts.jobs, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  check->add_option("--out", check_opts.out, "Output directory")->required();
  auto* samp = qc_cmd->add_subcommand("sample", "Stratified sample of a manifest");
  samp->add_option("manifest", sample_opts.input, "Manifest (.csv or .jsonl)")->required();
  samp->add_option("--fraction", sample_opts.fraction, "Fraction per stratum")
      ->check(CLI::Range(0.0, 1.0));
  samp->add_option("--strata", sample_opts.strata, "Comma-separated label fields")
      ->delimiter(',')
      ->check(CLI::IsMember({"category", "light", "angle", "environment", "language"}));
  samp->add_option("--seed", sample_opts.seed, "Random seed")->required();
  samp->add_option("--out", sample_opts.out, "Output directory")->required();

  // diffusion
  auto* diffusion = app.add_subcommand("diffusion", "Diffusion forward/backward math");
  diffusion->require_subcommand(1);
  DiffusionOpts demo_opts;
  auto* demo = diffusion->add_subcommand(
      "demo", "Noise and recover the deepest high-frequency layer with an oracle denoiser");
  demo->add_option("input", demo_opts.input, "Input image")->required();
  demo->add_option("--seed", demo_opts.seed, "Random seed")->required();
  demo->add_option("--depth", demo_opts.depth, "Pyramid depth")->check(CLI::PositiveNumber);
  demo->add_option("--steps", demo_opts.steps, "Sampler steps")->check(CLI::PositiveNumber);
  demo->add_option("--T", demo_opts.total_steps, "Schedule length")->check(CLI::PositiveNumber);
  demo->add_option("--beta-start", demo_opts.beta_start, "First beta");
  demo->add_option("--beta-end", demo_opts.beta_end, "Last beta");
  demo->add_option("--out", demo_opts.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  if (mev->parsed() && me.dir.empty() && me.highlight.empty()) {
    err << "error: maskeval needs --dir or --highlight/--gt/--mask\n\n" << mev->help();
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    RunReport report;
    if (dec->parsed()) report = pyramid_decompose(pyr_dec);
    else if (rec->parsed()) report = pyramid_reconstruct(pyr_rec);
    else if (gen->parsed()) report = prior_gen(prior_opts);
    else if (mev->parsed()) report = maskeval(me);
    else if (cmp->parsed()) report = metrics_cmp(cmp_opts);
    else if (batch->parsed()) report = metrics_batch(batch_opts);
    else if (scan->parsed()) report = qc_scan(scan_opts);
    else if (check->parsed()) report = qc_check(check_opts);
    else if (samp->parsed()) report = qc_sample(sample_opts);
    else if (demo->parsed()) report = diffusion_demo(demo_opts);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << report.to_json(elapsed).dump() << '\n';
    return 0;
  } catch (const Error& e) {
    json j = json::object();
    j["code"] = to_string(e.code());
    j["message"] = e.what();
    out << j.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    json j = json::object();
    j["code"] = "internal";
    j["message"] = e.what();
    out << j.dump() << '\n';
    return 1;
  }
}

}  // namespace hilite::cli
