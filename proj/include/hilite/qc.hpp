#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hilite/image.hpp"
#include "hilite/prior.hpp"

namespace hilite::qc {

enum class Category { SingleLeaf, Book, Poster, Menu, Card, PlasticSleeved };
enum class Light { Cold, White, Warm, Red, Yellow, Green, Cyan, Blue, Purple };
enum class Angle { Vertical, Deg15, Deg30, Deg45, Gt45 };
enum class Environment { Laboratory, Daily };

std::string_view to_string(Category v) noexcept;
std::string_view to_string(Light v) noexcept;
std::string_view to_string(Angle v) noexcept;
std::string_view to_string(Environment v) noexcept;

std::optional<Category> parse_category(std::string_view s) noexcept;
std::optional<Light> parse_light(std::string_view s) noexcept;
std::optional<Angle> parse_angle(std::string_view s) noexcept;
std::optional<Environment> parse_environment(std::string_view s) noexcept;

inline constexpr std::string_view kUndeterminedLanguage = "und";

struct PairRecord {
  std::string id;
  std::filesystem::path highlight_path;
  std::filesystem::path gt_path;
  Category category = Category::SingleLeaf;
  Light light = Light::White;
  Angle angle = Angle::Vertical;
  Environment environment = Environment::Laboratory;
  std::string language{kUndeterminedLanguage};

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct Manifest {
  std::vector<PairRecord> records;
  std::filesystem::path source_root;
};

struct SkippedEntry {
  std::filesystem::path path;
  std::string reason;
};

struct ScanResult {
  Manifest manifest;
  std::vector<SkippedEntry> skipped;
};

/// Walks `<category>/<light>/<angle>/<environment>[/<language>]/<id>_{hl,gt}.png`
/// under root. Records come back sorted by id. Throws EmptyInput when no pair
/// is found, DuplicateId naming both locations.
ScanResult scan_manifest(const std::filesystem::path& root);

/// Throws DuplicateId when two records share an id.
void validate_unique_ids(const Manifest& m);

struct AlignmentConfig {
  int dilation = 5;
  int max_shift = 8;
  double residual_tol = 0.02;
  PriorConfig prior;
};

enum class Verdict { Aligned, Misaligned };
std::string_view to_string(Verdict v) noexcept;

struct AlignmentReport {
  std::string pair_id;
  double residual_outside_mask = 0.0;
  int shift_dx = 0;
  int shift_dy = 0;
  Verdict verdict = Verdict::Aligned;
  /// Empty when the verdict follows from the measurements alone.
  std::string note;
};

/// Square (Chebyshev) dilation by `radius` pixels.
BinaryMask dilate(const BinaryMask& mask, int radius);

/// Central-difference gradient magnitude, replicate borders.
GrayImage gradient_magnitude(const GrayImage& img);

/// Core of check_alignment on in-memory images.
AlignmentReport assess_alignment(std::string pair_id,
                                 const ImageBuffer& highlight,
                                 const ImageBuffer& gt,
                                 const AlignmentConfig& cfg = {});

/// Loads both images and runs assess_alignment.
AlignmentReport check_alignment(const PairRecord& pair,
                                const AlignmentConfig& cfg = {});

struct FilterResult {
  Manifest kept;
  std::vector<AlignmentReport> rejected;
  /// One report per input record, in input order.
  std::vector<AlignmentReport> reports;
};

/// Runs check_alignment over every record with `jobs` worker threads
/// (0 = OpenMP default). Output order follows input order.
FilterResult filter_aligned(const Manifest& m, const AlignmentConfig& cfg = {},
                            int jobs = 0);

/// Names accepted as strata: category, light, angle, environment, language.
bool is_stratum_field(std::string_view name) noexcept;

/// Per stratum, ceil(fraction * n) records without replacement. The output is
/// sorted by id.
Manifest stratified_sample(const Manifest& m, double fraction,
                           const std::vector<std::string>& strata,
                           std::uint64_t seed);

/// Serialized stratum key of a record for the chosen fields, e.g.
/// "book|warm".
std::string stratum_key(const PairRecord& r,
                        const std::vector<std::string>& strata);

// Manifest files.
inline constexpr std::string_view kManifestCsvHeader =
    "id,highlight_path,gt_path,category,light,angle,environment,language";

void write_manifest_csv(const Manifest& m, const std::filesystem::path& path);
void write_manifest_jsonl(const Manifest& m, const std::filesystem::path& path);
/// Picks CSV or JSON lines by extension (.csv / .jsonl).
Manifest read_manifest(const std::filesystem::path& path);

std::string to_json_line(const AlignmentReport& r);
void write_reports_jsonl(const std::vector<AlignmentReport>& reports,
                         const std::filesystem::path& path);

}  // namespace hilite::qc
