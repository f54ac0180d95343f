#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "doctest.h"
#include "hilite/error.hpp"
#include "hilite/image_io.hpp"
#include "hilite/qc.hpp"
#include "test_support.hpp"

using namespace hilite;
using namespace hilite::qc;
using hilite::testing::TempDir;

namespace {

namespace fs = std::filesystem;

void write_pair(const fs::path& dir, const std::string& id, const ImageBuffer& hl, const ImageBuffer& gt) {
  fs::create_directories(dir);
  save_image(hl, dir / (id + "_hl.png"));
  save_image(gt, dir / (id + "_gt.png"));
}

PairRecord record(std::string id, Category c, Light l = Light::White) {
  PairRecord r;
  r.id = std::move(id);
  r.highlight_path = r.id + "_hl.png";
  r.gt_path = r.id + "_gt.png";
  r.category = c;
  r.light = l;
  return r;
}

std::vector<std::string> ids(const Manifest& m) {
  std::vector<std::string> out;
  for (const auto& r : m.records) out.push_back(r.id);
  return out;
}

}  // namespace

TEST_CASE("label enums round trip through their names") {
  for (auto c : {Category::SingleLeaf, Category::Book, Category::Poster, Category::Menu, Category::Card,
                 Category::PlasticSleeved})
    CHECK(parse_category(to_string(c)) == c);
  for (auto l : {Light::Cold, Light::White, Light::Warm, Light::Red, Light::Yellow, Light::Green, Light::Cyan,
                 Light::Blue, Light::Purple})
    CHECK(parse_light(to_string(l)) == l);
  for (auto a : {Angle::Vertical, Angle::Deg15, Angle::Deg30, Angle::Deg45, Angle::Gt45})
    CHECK(parse_angle(to_string(a)) == a);
  CHECK(parse_environment("daily") == Environment::Daily);
  CHECK_FALSE(parse_category("magazine").has_value());
  CHECK(to_string(Category::PlasticSleeved) == "plastic_sleeved");
}

TEST_CASE("scan_manifest finds well-formed pairs") {
  TempDir root("scan");
  const ImageBuffer img(4, 4, 1, 0.5f);
  write_pair(root / "book/warm/vertical/laboratory", "p1", img, img);
  write_pair(root / "poster/blue/deg30/daily", "p2", img, img);
  write_pair(root / "card/white/gt45/daily/zh", "p3", img, img);
  const ScanResult s = scan_manifest(root.path());
  REQUIRE(s.manifest.records.size() == 3);
  CHECK(s.skipped.empty());
  CHECK(ids(s.manifest) == std::vector<std::string>{"p1", "p2", "p3"});
  const auto& p1 = s.manifest.records[0];
  CHECK(p1.category == Category::Book);
  CHECK(p1.light == Light::Warm);
  CHECK(p1.angle == Angle::Vertical);
  CHECK(p1.environment == Environment::Laboratory);
  CHECK(p1.language == "und");
  CHECK(fs::exists(p1.highlight_path));
  CHECK(s.manifest.records[2].language == "zh");
  CHECK(s.manifest.records[2].angle == Angle::Gt45);
}

TEST_CASE("scan_manifest reports unusable entries") {
  TempDir root("scan");
  const ImageBuffer img(4, 4, 1, 0.5f);
  write_pair(root / "book/warm/vertical/laboratory", "ok", img, img);
  save_image(img, root / "book/warm/vertical/laboratory/lonely_hl.png");
  write_pair(root / "magazine/warm/vertical/laboratory", "badcat", img, img);
  write_pair(root / "book", "shallow", img, img);
  const ScanResult s = scan_manifest(root.path());
  REQUIRE(s.manifest.records.size() == 1);
  REQUIRE(s.skipped.size() >= 3);
  std::string reasons;
  for (const auto& e : s.skipped) {
    CHECK_FALSE(e.reason.empty());
    reasons += e.path.string() + ": " + e.reason + "\n";
  }
  CHECK(reasons.find("lonely") != std::string::npos);
  CHECK(reasons.find("magazine") != std::string::npos);
  CHECK(reasons.find("shallow") != std::string::npos);
}

TEST_CASE("scan_manifest errors") {
  TempDir root("scan");
  try {
    scan_manifest(root.path());
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
  try {
    scan_manifest(root / "absent");
    FAIL("expected MissingFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }
  const ImageBuffer img(4, 4, 1, 0.5f);
  write_pair(root / "book/warm/vertical/laboratory", "dup", img, img);
  write_pair(root / "menu/red/deg15/daily", "dup", img, img);
  try {
    scan_manifest(root.path());
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateId);
    const std::string msg = e.what();
    CHECK(msg.find("book") != std::string::npos);
    CHECK(msg.find("menu") != std::string::npos);
  }
}

TEST_CASE("manifest CSV and JSON lines round trip") {
  TempDir dir("man");
  Manifest m;
  m.records.push_back(record("a,1", Category::Book, Light::Cyan));
  m.records.push_back(record("b\"q", Category::Menu));
  m.records[1].language = "en";
  m.records[1].angle = Angle::Deg45;
  write_manifest_csv(m, dir / "m.csv");
  write_manifest_jsonl(m, dir / "m.jsonl");
  std::ifstream in(dir / "m.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == kManifestCsvHeader);
  CHECK(read_manifest(dir / "m.csv").records == m.records);
  CHECK(read_manifest(dir / "m.jsonl").records == m.records);

  std::ifstream jl(dir / "m.jsonl");
  std::string line;
  std::getline(jl, line);
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("id") == "a,1");
  CHECK(j.at("light") == "cyan");

  std::ofstream(dir / "bad.csv") << kManifestCsvHeader << "\nx,a,b,book,warm,vertical\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad.csv"), Error);
  std::ofstream(dir / "bad.jsonl") << "{not json\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad.jsonl"), Error);
}

TEST_CASE("validate_unique_ids") {
  Manifest m;
  m.records = {record("x", Category::Book), record("x", Category::Card)};
  CHECK_THROWS_AS(validate_unique_ids(m), Error);
  m.records[1].id = "y";
  CHECK_NOTHROW(validate_unique_ids(m));
}

TEST_CASE("dilate grows by a Chebyshev radius") {
  BinaryMask m(11, 11, 0);
  m.at(5, 5) = 1;
  const BinaryMask d = dilate(m, 2);
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) CHECK(d.at(x, y) == (std::abs(x - 5) <= 2 && std::abs(y - 5) <= 2));
  CHECK(dilate(m, 0).data == m.data);
}

TEST_CASE("gradient magnitude of a ramp is constant inside") {
  GrayImage g(6, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) g.at(x, y) = 0.1f * x;
  const GrayImage m = gradient_magnitude(g);
  for (int y = 0; y < 4; ++y)
    for (int x = 1; x < 5; ++x) CHECK(m.at(x, y) == doctest::Approx(0.1).epsilon(1e-5));
}

TEST_CASE("assess_alignment on synthetic pairs") {
  Rng rng(1);
  const ImageBuffer gt = testing::make_document(160, 160, 3, rng, 0.8f, 0.004f);

  const AlignmentReport self = assess_alignment("self", gt, gt);
  CHECK(self.residual_outside_mask == 0.0);
  CHECK(self.shift_dx == 0);
  CHECK(self.shift_dy == 0);
  CHECK(self.verdict == Verdict::Aligned);

  const AlignmentReport shifted = assess_alignment("shift", testing::translate(gt, 3, 0), gt);
  CHECK(shifted.shift_dx == 3);
  CHECK(shifted.shift_dy == 0);
  CHECK(shifted.verdict == Verdict::Misaligned);

  const AlignmentReport one = assess_alignment("one", testing::translate(gt, 0, -1), gt);
  CHECK(one.shift_dy == -1);
  CHECK(one.verdict == Verdict::Misaligned);

  const ImageBuffer hl = testing::add_blob(gt, {70, 90, 10, 0.15});
  const AlignmentReport blob = assess_alignment("blob", hl, gt);
  CHECK(blob.residual_outside_mask < 0.02);
  CHECK(blob.shift_dx == 0);
  CHECK(blob.shift_dy == 0);
  CHECK(blob.verdict == Verdict::Aligned);

  const AlignmentReport dims = assess_alignment("dims", gt, testing::make_document(150, 160, 3, rng, 0.8f));
  CHECK(dims.verdict == Verdict::Misaligned);
  CHECK_FALSE(dims.note.empty());
}

TEST_CASE("highlight-only differences inside the dilated mask do not change the verdict") {
  Rng rng(2);
  for (int trial = 0; trial < 4; ++trial) {
    const ImageBuffer gt = testing::make_document(128, 128, 1, rng, 0.75f, 0.004f);
    const ImageBuffer base_hl = testing::translate(gt, trial % 2 ? 2 : 0, 0);
    const Verdict before = assess_alignment("a", base_hl, gt).verdict;
    const ImageBuffer hl = testing::add_blob(base_hl, {40 + 40 * rng.uniform(), 40 + 40 * rng.uniform(),
                                                       6 + 4 * rng.uniform(), 0.2});
    CHECK(assess_alignment("b", hl, gt).verdict == before);
  }
}

TEST_CASE("filter_aligned partitions and rejects the shifted pair") {
  TempDir dir("filter");
  Rng rng(3);
  Manifest m;
  for (int i = 0; i < 6; ++i) {
    const ImageBuffer gt = testing::make_document(96, 96, 1, rng, 0.8f, 0.004f);
    ImageBuffer hl = testing::add_noise(gt, 0.004, rng);
    if (i == 4) hl = testing::translate(hl, 0, 2);
    const std::string id = "pair" + std::to_string(i);
    write_pair(dir.path(), id, hl, gt);
    PairRecord r = record(id, Category::Book);
    r.highlight_path = dir / (id + "_hl.png");
    r.gt_path = dir / (id + "_gt.png");
    m.records.push_back(r);
  }
  for (int jobs : {1, 3}) {
    const FilterResult f = filter_aligned(m, {}, jobs);
    REQUIRE(f.rejected.size() == 1);
    CHECK(f.rejected[0].pair_id == "pair4");
    CHECK(f.kept.records.size() == 5);
    REQUIRE(f.reports.size() == 6);
    std::set<std::string> seen;
    for (const auto& r : f.kept.records) seen.insert(r.id);
    for (const auto& r : f.rejected) CHECK(seen.insert(r.pair_id).second);
    CHECK(seen.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(f.reports[i].pair_id == m.records[i].id);
  }

  m.records[2].gt_path = dir / "missing.png";
  CHECK_THROWS_AS(filter_aligned(m, {}, 2), Error);
  CHECK_THROWS_AS(filter_aligned(Manifest{}, {}, 1), Error);
}

TEST_CASE("alignment report JSON line") {
  AlignmentReport r{"p", 0.0125, 3, -1, Verdict::Misaligned, ""};
  const auto j = nlohmann::json::parse(to_json_line(r));
  CHECK(j.at("pair_id") == "p");
  CHECK(j.at("estimated_shift") == nlohmann::json::array({3, -1}));
  CHECK(j.at("verdict") == "misaligned");
  CHECK(j.at("residual_outside_mask").get<double>() == 0.0125);
  CHECK_FALSE(j.contains("note"));
}

TEST_CASE("stratified_sample per-stratum ceiling counts") {
  Manifest m;
  for (int i = 0; i < 60; ++i) m.records.push_back(record("b" + std::to_string(100 + i), Category::Book));
  for (int i = 0; i < 40; ++i) m.records.push_back(record("p" + std::to_string(100 + i), Category::Poster));

  const Manifest s = stratified_sample(m, 0.1, {"category"}, 7);
  std::map<Category, int> counts;
  for (const auto& r : s.records) ++counts[r.category];
  CHECK(counts[Category::Book] == 6);
  CHECK(counts[Category::Poster] == 4);
  CHECK(std::is_sorted(s.records.begin(), s.records.end(),
                       [](const PairRecord& a, const PairRecord& b) { return a.id < b.id; }));
  CHECK(ids(stratified_sample(m, 0.1, {"category"}, 7)) == ids(s));
  CHECK_FALSE(ids(stratified_sample(m, 0.1, {"category"}, 8)) == ids(s));

  CHECK(stratified_sample(m, 0.1, {}, 1).records.size() == 10);
  CHECK(stratified_sample(m, 0.01, {"category"}, 1).records.size() == 2);
  // 0.3 * 60 is 18 up to rounding noise; the ceiling must not bump it to 19.
  CHECK(stratified_sample(m, 0.3, {"category"}, 1).records.size() == 18 + 12);

  const Manifest all = stratified_sample(m, 1.0, {"category", "light"}, 3);
  CHECK(all.records.size() == 100);
  std::vector<std::string> expected = ids(m);
  std::sort(expected.begin(), expected.end());
  CHECK(ids(all) == expected);

  CHECK_THROWS_AS(stratified_sample(Manifest{}, 0.1, {"category"}, 1), Error);
  CHECK_THROWS_AS(stratified_sample(m, 0.0, {"category"}, 1), Error);
  CHECK_THROWS_AS(stratified_sample(m, 1.5, {"category"}, 1), Error);
  CHECK_THROWS_AS(stratified_sample(m, 0.1, {"colour"}, 1), Error);
}

TEST_CASE("stratum keys") {
  PairRecord r = record("x", Category::Book, Light::Warm);
  r.language = "de";
  CHECK(stratum_key(r, {"category", "light"}) == "book|warm");
  CHECK(stratum_key(r, {"language"}) == "de");
  CHECK(is_stratum_field("angle"));
  CHECK_FALSE(is_stratum_field("id"));
}
