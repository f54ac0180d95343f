#include "hilite/qc.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <map>
#include <string>
#include <utility>

#include "hilite/error.hpp"
#include "hilite/image_io.hpp"
#include "hilite/kernels.hpp"
#include "hilite/rng.hpp"

namespace hilite::qc {

namespace fs = std::filesystem;

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Category, 6> kCategories{{
    {Category::SingleLeaf, "single_leaf"},
    {Category::Book, "book"},
    {Category::Poster, "poster"},
    {Category::Menu, "menu"},
    {Category::Card, "card"},
    {Category::PlasticSleeved, "plastic_sleeved"},
}};
constexpr NameTable<Light, 9> kLights{{
    {Light::Cold, "cold"},
    {Light::White, "white"},
    {Light::Warm, "warm"},
    {Light::Red, "red"},
    {Light::Yellow, "yellow"},
    {Light::Green, "green"},
    {Light::Cyan, "cyan"},
    {Light::Blue, "blue"},
    {Light::Purple, "purple"},
}};
constexpr NameTable<Angle, 5> kAngles{{
    {Angle::Vertical, "vertical"},
    {Angle::Deg15, "deg15"},
    {Angle::Deg30, "deg30"},
    {Angle::Deg45, "deg45"},
    {Angle::Gt45, "gt45"},
}};
constexpr NameTable<Environment, 2> kEnvironments{{
    {Environment::Laboratory, "laboratory"},
    {Environment::Daily, "daily"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) noexcept {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "unknown";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const NameTable<E, N>& table,
                            std::string_view s) noexcept {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

constexpr std::string_view kHighlightSuffix = "_hl";
constexpr std::string_view kGroundTruthSuffix = "_gt";

struct PendingPair {
  fs::path highlight;
  fs::path gt;
  std::vector<std::string> labels;
};

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Category v) noexcept { return name_of(kCategories, v); }
std::string_view to_string(Light v) noexcept { return name_of(kLights, v); }
std::string_view to_string(Angle v) noexcept { return name_of(kAngles, v); }
std::string_view to_string(Environment v) noexcept {
  return name_of(kEnvironments, v);
}
std::string_view to_string(Verdict v) noexcept {
  return v == Verdict::Aligned ? "aligned" : "misaligned";
}

std::optional<Category> parse_category(std::string_view s) noexcept {
  return parse_name(kCategories, s);
}
std::optional<Light> parse_light(std::string_view s) noexcept {
  return parse_name(kLights, s);
}
std::optional<Angle> parse_angle(std::string_view s) noexcept {
  return parse_name(kAngles, s);
}
std::optional<Environment> parse_environment(std::string_view s) noexcept {
  return parse_name(kEnvironments, s);
}

// ------------------------------------------------------------------ scanning

ScanResult scan_manifest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::MissingFile, "no such directory: " + root.string());
  }

  ScanResult result;
  result.manifest.source_root = root;
  // Keyed by (directory, id) so that identical ids in different folders can
  // be reported as duplicates instead of being merged.
  std::map<std::pair<std::string, std::string>, PendingPair> pending;

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::end(it); ++it)
    if (it->is_regular_file()) files.push_back(it->path());
  std::sort(files.begin(), files.end());

  for (const fs::path& file : files) {
    const fs::path rel = file.lexically_relative(root);
    const std::string stem = file.stem().string();
    if (file.extension() != ".png") {
      result.skipped.push_back({file, "not a .png file"});
      continue;
    }
    const bool is_hl = stem.ends_with(kHighlightSuffix);
    const bool is_gt = stem.ends_with(kGroundTruthSuffix);
    if ((!is_hl && !is_gt) || stem.size() <= kHighlightSuffix.size()) {
      result.skipped.push_back({file, "file name is not <id>_hl.png or <id>_gt.png"});
      continue;
    }
    std::vector<std::string> labels;
    for (const auto& part : rel.parent_path()) labels.push_back(part.string());
    if (labels.size() != 4 && labels.size() != 5) {
      result.skipped.push_back(
          {file, "expected <category>/<light>/<angle>/<environment>[/<language>]"});
      continue;
    }
    std::string bad;
    if (!parse_category(labels[0])) bad = "unknown category '" + labels[0] + "'";
    else if (!parse_light(labels[1])) bad = "unknown light '" + labels[1] + "'";
    else if (!parse_angle(labels[2])) bad = "unknown angle '" + labels[2] + "'";
    else if (!parse_environment(labels[3]))
      bad = "unknown environment '" + labels[3] + "'";
    if (!bad.empty()) {
      result.skipped.push_back({file, bad});
      continue;
    }
    const std::string id = stem.substr(0, stem.size() - kHighlightSuffix.size());
    PendingPair& p = pending[{rel.parent_path().generic_string(), id}];
    (is_hl ? p.highlight : p.gt) = file;
    p.labels = std::move(labels);
  }

  std::map<std::string, fs::path> seen;  // id -> directory of first occurrence
  for (auto& [key, p] : pending) {
    const std::string& id = key.second;
    const fs::path& some = p.highlight.empty() ? p.gt : p.highlight;
    if (p.highlight.empty() || p.gt.empty()) {
      result.skipped.push_back(
          {some, p.highlight.empty() ? "missing highlight file (<id>_hl.png)"
                                     : "missing ground-truth file (<id>_gt.png)"});
      continue;
    }
    if (auto [it, inserted] = seen.emplace(id, p.highlight.parent_path()); !inserted) {
      throw Error(ErrorCode::DuplicateId,
                  "duplicate id '" + id + "' in " + it->second.string() +
                      " and " + p.highlight.parent_path().string());
    }
    PairRecord r;
    r.id = id;
    r.highlight_path = p.highlight;
    r.gt_path = p.gt;
    r.category = *parse_category(p.labels[0]);
    r.light = *parse_light(p.labels[1]);
    r.angle = *parse_angle(p.labels[2]);
    r.environment = *parse_environment(p.labels[3]);
    if (p.labels.size() == 5) r.language = p.labels[4];
    result.manifest.records.push_back(std::move(r));
  }

  if (result.manifest.records.empty()) {
    throw Error(ErrorCode::EmptyInput, "no image pairs found under " + root.string());
  }
  std::sort(result.manifest.records.begin(), result.manifest.records.end(),
            [](const PairRecord& a, const PairRecord& b) { return a.id < b.id; });
  std::sort(result.skipped.begin(), result.skipped.end(),
            [](const SkippedEntry& a, const SkippedEntry& b) { return a.path < b.path; });
  return result;
}

void validate_unique_ids(const Manifest& m) {
  std::map<std::string_view, const PairRecord*> seen;
  for (const PairRecord& r : m.records) {
    if (auto [it, inserted] = seen.emplace(r.id, &r); !inserted) {
      throw Error(ErrorCode::DuplicateId,
                  "duplicate id '" + r.id + "' in " +
                      it->second->highlight_path.string() + " and " +
                      r.highlight_path.string());
    }
  }
}

// ----------------------------------------------------------------- alignment

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int w = mask.width, h = mask.height;
  BinaryMask rows(w, h, 0), out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !v; ++k)
        v = mask.at(k, y);
      rows.at(x, y) = v;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !v; ++k)
        v = rows.at(x, k);
      out.at(x, y) = v;
    }
  return out;
}

GrayImage gradient_magnitude(const GrayImage& img) {
  const int w = img.width, h = img.height;
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx =
          0.5 * (img.at(std::min(x + 1, w - 1), y) - img.at(std::max(x - 1, 0), y));
      const double gy =
          0.5 * (img.at(x, std::min(y + 1, h - 1)) - img.at(x, std::max(y - 1, 0)));
      out.at(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  return out;
}

AlignmentReport assess_alignment(std::string pair_id, const ImageBuffer& highlight,
                                 const ImageBuffer& gt, const AlignmentConfig& cfg) {
  AlignmentReport report;
  report.pair_id = std::move(pair_id);
  if (highlight.width() != gt.width() || highlight.height() != gt.height()) {
    report.verdict = Verdict::Misaligned;
    report.note = "dimension mismatch";
    return report;
  }

  const PriorResult prior = generate_prior(highlight, gt, cfg.prior);
  const BinaryMask grown = dilate(prior.binary, cfg.dilation);
  const GrayImage hl_gray = to_grayscale(highlight);
  const GrayImage gt_gray = to_grayscale(gt);

  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < grown.data.size(); ++i) {
    if (grown.data[i]) continue;
    sum += std::abs(static_cast<double>(hl_gray.data[i]) - gt_gray.data[i]);
    ++count;
  }
  if (count == 0) report.note = "highlight mask covers the whole image";
  report.residual_outside_mask = count ? sum / static_cast<double>(count) : 0.0;

  const auto shift = kernels::best_shift(gradient_magnitude(gt_gray),
                                         gradient_magnitude(hl_gray), cfg.max_shift);
  report.shift_dx = shift.dx;
  report.shift_dy = shift.dy;
  const bool shifted = shift.dx != 0 || shift.dy != 0;
  report.verdict = (report.residual_outside_mask > cfg.residual_tol || shifted)
                       ? Verdict::Misaligned
                       : Verdict::Aligned;
  return report;
}

AlignmentReport check_alignment(const PairRecord& pair, const AlignmentConfig& cfg) {
  const ImageBuffer highlight = load_image(pair.highlight_path);
  const ImageBuffer gt = load_image(pair.gt_path);
  return assess_alignment(pair.id, highlight, gt, cfg);
}

FilterResult filter_aligned(const Manifest& m, const AlignmentConfig& cfg, int jobs) {
  if (m.records.empty()) throw Error(ErrorCode::EmptyInput, "manifest is empty");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.records.size());
  std::vector<AlignmentReport> reports(m.records.size());
  std::vector<std::exception_ptr> failures(m.records.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads) if (jobs != 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      reports[i] = check_alignment(m.records[i], cfg);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  FilterResult out;
  out.kept.source_root = m.source_root;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].verdict == Verdict::Aligned) {
      out.kept.records.push_back(m.records[i]);
    } else {
      out.rejected.push_back(reports[i]);
    }
  }
  out.reports = std::move(reports);
  return out;
}

// ------------------------------------------------------------------ sampling

bool is_stratum_field(std::string_view name) noexcept {
  return name == "category" || name == "light" || name == "angle" ||
         name == "environment" || name == "language";
}

std::string stratum_key(const PairRecord& r, const std::vector<std::string>& strata) {
  std::string key;
  for (const std::string& field : strata) {
    if (!key.empty()) key += '|';
    if (field == "category") key += to_string(r.category);
    else if (field == "light") key += to_string(r.light);
    else if (field == "angle") key += to_string(r.angle);
    else if (field == "environment") key += to_string(r.environment);
    else if (field == "language") key += r.language;
    else throw Error(ErrorCode::InvalidArgument, "unknown stratum field '" + field + "'");
  }
  return key;
}

Manifest stratified_sample(const Manifest& m, double fraction,
                           const std::vector<std::string>& strata,
                           std::uint64_t seed) {
  if (m.records.empty()) throw Error(ErrorCode::EmptyInput, "manifest is empty");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "fraction must lie in (0,1], got " + std::to_string(fraction));
  }
  for (const std::string& field : strata) {
    if (!is_stratum_field(field)) {
      throw Error(ErrorCode::InvalidArgument, "unknown stratum field '" + field + "'");
    }
  }

  std::map<std::string, std::vector<const PairRecord*>> groups;
  for (const PairRecord& r : m.records) groups[stratum_key(r, strata)].push_back(&r);

  const Rng base(seed);
  Manifest out;
  out.source_root = m.source_root;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(),
              [](const PairRecord* a, const PairRecord* b) { return a->id < b->id; });
    const std::size_t n = members.size();
    // The epsilon keeps products like 0.7 * 10 from rounding up past 7.
    auto take = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n) - 1e-9));
    take = std::clamp<std::size_t>(take, 1, n);

    // Each stratum draws from its own stream so its selection does not depend
    // on which other strata exist.
    Rng rng = base.split(fnv1a(key));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(members[i], members[j]);
    }
    for (std::size_t i = 0; i < take; ++i) out.records.push_back(*members[i]);
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const PairRecord& a, const PairRecord& b) { return a.id < b.id; });
  return out;
}

}  // namespace hilite::qc
