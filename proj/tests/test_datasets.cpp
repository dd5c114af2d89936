#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "actland/datasets.hpp"
#include "actland/error.hpp"
#include "actland/persistence.hpp"
#include "doctest.h"

using namespace actland;
namespace fs = std::filesystem;

namespace {

// Integer lattice-unit scan: points (i, j) * spacing, disks and outer circle
// compared in squared lattice units.
struct Counts {
  std::size_t total = 0, disks = 0;
};

Counts scan_default_config() {
  // spacing 0.05 -> outer radius 20 units, small radius 2.4 units, centres at multiples of 10.
  Counts c;
  for (int i = -40; i <= 40; ++i) {
    for (int j = -40; j <= 40; ++j) {
      if (i * i + j * j > 400) continue;
      ++c.total;
      bool in_disk = false;
      for (int ci : {-10, 0, 10})
        for (int cj : {-10, 0, 10})
          if ((i - ci) * (i - ci) + (j - cj) * (j - cj) <= 5.76) in_disk = true;
      c.disks += in_disk;
    }
  }
  return c;
}

std::string write_temp(const std::string& name, const std::string& bytes) {
  const auto path = fs::temp_directory_path() / ("actland_" + name);
  std::ofstream(path, std::ios::binary) << bytes;
  return path.string();
}

std::string image_bytes(std::uint32_t magic, std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                        std::size_t payload) {
  std::string s;
  for (auto v : {magic, count, rows, cols})
    for (int sh = 24; sh >= 0; sh -= 8) s.push_back(static_cast<char>((v >> sh) & 0xFF));
  for (std::size_t i = 0; i < payload; ++i) s.push_back(static_cast<char>(i % 256));
  return s;
}

std::string label_bytes(std::uint32_t magic, std::vector<std::uint8_t> labels) {
  std::string s;
  for (auto v : {magic, static_cast<std::uint32_t>(labels.size())})
    for (int sh = 24; sh >= 0; sh -= 8) s.push_back(static_cast<char>((v >> sh) & 0xFF));
  for (auto l : labels) s.push_back(static_cast<char>(l));
  return s;
}

}  // namespace

TEST_CASE("default disks match an integer containment scan") {
  auto ds = generate_disks(DisksConfig{});
  const auto expected = scan_default_config();
  CHECK(ds.cloud.size() == expected.total);
  std::size_t disks = 0;
  for (int l : ds.cloud.labels()) disks += l == kDiskClass;
  CHECK(disks == expected.disks);
  CHECK(ds.class_names.size() == 2);
}

TEST_CASE("disk labels and clipping") {
  auto ds = generate_disks(DisksConfig{});
  bool centre_seen = false;
  for (std::size_t i = 0; i < ds.cloud.size(); ++i) {
    auto p = ds.cloud.point(i);
    CHECK(std::hypot(p[0], p[1]) <= 1.0 + 1e-9);
    if (std::abs(p[0] - 0.5) < 1e-12 && std::abs(p[1] + 0.5) < 1e-12) {
      centre_seen = true;
      CHECK(ds.cloud.labels()[i] == kDiskClass);
    }
  }
  CHECK(centre_seen);
}

TEST_CASE("invalid disk configurations") {
  DisksConfig overlap;
  overlap.small_disk_radius = 0.3;
  CHECK_THROWS_AS(generate_disks(overlap), Error);
  DisksConfig escape;
  escape.small_disk_centers = {{0.95, 0.0}};
  CHECK_THROWS_AS(generate_disks(escape), Error);
  DisksConfig spacing;
  spacing.lattice_spacing = 0.0;
  CHECK_THROWS_AS(generate_disks(spacing), Error);
}

TEST_CASE("coarse complement has nine holes at some scale") {
  DisksConfig cfg;
  cfg.lattice_spacing = 0.1;
  auto ds = generate_disks(cfg);
  std::vector<std::size_t> all(ds.cloud.size());
  std::iota(all.begin(), all.end(), 0);
  auto c2 = ds.cloud.subset(filter_class(ds, all, kComplementClass));
  auto dm = pairwise_distances(c2);
  const double r_max = 0.35;
  auto explicit_d = compute_persistence(build_vr_filtration(dm, 2, r_max), 1);
  auto implicit_d = compute_persistence_implicit(dm, 1, r_max);
  CHECK(explicit_d[1].canonical().pairs == implicit_d[1].canonical().pairs);
  bool nine = false;
  for (double r = 0.1; r < r_max; r += 0.005) nine = nine || betti_at(explicit_d[1], r) == 9;
  CHECK(nine);
}

TEST_CASE("idx parsing") {
  const auto img = write_temp("img.idx", image_bytes(2051, 2, 28, 28, 2 * 784));
  const auto lab = write_temp("lab.idx", label_bytes(2049, {3, 9}));
  SUBCASE("header bytes") {
    const auto bytes = image_bytes(2051, 2, 28, 28, 0);
    CHECK(static_cast<unsigned char>(bytes[2]) == 0x08);
    CHECK(static_cast<unsigned char>(bytes[3]) == 0x03);
  }
  SUBCASE("load") {
    auto ds = load_idx(img, lab);
    CHECK(ds.cloud.size() == 2);
    CHECK(ds.cloud.dim() == 784);
    CHECK(ds.cloud.labels() == std::vector<int>{3, 9});
    CHECK(ds.cloud.point(0)[255] == 1.0);
    CHECK(ds.cloud.point(0)[0] == 0.0);
  }
  SUBCASE("labels file as images") { CHECK_THROWS_AS(load_idx(lab, lab), Error); }
  SUBCASE("images file as labels") {
    try {
      load_idx(img, img);
      FAIL("expected BadMagic");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadMagic);
    }
  }
  SUBCASE("count mismatch") {
    const auto lab3 = write_temp("lab3.idx", label_bytes(2049, {1, 2, 3}));
    try {
      load_idx(img, lab3);
      FAIL("expected CountMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CountMismatch);
    }
  }
  SUBCASE("truncated") {
    const auto cut = write_temp("cut.idx", image_bytes(2051, 2, 28, 28, 784 + 5));
    try {
      load_idx(cut, lab);
      FAIL("expected TruncatedFile");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TruncatedFile);
    }
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_idx("/nonexistent/x.idx", lab), Error); }
  SUBCASE("re-serialization is byte-identical") {
    const auto bytes = image_bytes(2051, 2, 28, 28, 2 * 784);
    std::istringstream in(bytes);
    auto parsed = read_idx_images(in);
    std::ostringstream out;
    write_idx_images(out, parsed);
    CHECK(out.str() == bytes);
    const auto lbytes = label_bytes(2049, {3, 9});
    std::istringstream lin(lbytes);
    std::ostringstream lout;
    write_idx_labels(lout, read_idx_labels(lin));
    CHECK(lout.str() == lbytes);
  }
}

TEST_CASE("splits") {
  LabeledDataset ds;
  std::vector<double> c(1000);
  std::iota(c.begin(), c.end(), 0.0);
  ds.cloud = PointCloud(1, c, std::vector<int>(1000, 0));
  auto s = split_and_subsample(ds, 0.9, 50, 3);
  CHECK(s.train.size() == 900);
  CHECK(s.test.size() == 100);
  CHECK(s.batch.size() == 50);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1000);
  auto again = split_and_subsample(ds, 0.9, 50, 3);
  CHECK(again.train == s.train);
  CHECK(again.batch == s.batch);
  CHECK_FALSE(split_and_subsample(ds, 0.9, 50, 4).train == s.train);
  // The batch mixes training and test points.
  std::set<std::size_t> test(s.test.begin(), s.test.end());
  std::size_t from_test = 0;
  for (auto i : s.batch) from_test += test.count(i);
  CHECK(from_test > 0);
  CHECK(from_test < s.batch.size());
  CHECK_THROWS_AS(split_and_subsample(ds, 0.9, 1001, 3), Error);
  CHECK_THROWS_AS(split_and_subsample(ds, 1.0, 10, 3), Error);
  CHECK_THROWS_AS(random_subset(5, 6, 0), Error);
}

TEST_CASE("stride-2 sublattice") {
  LabeledDataset ds;
  std::vector<double> c;
  for (int j = 0; j < 40; ++j)
    for (int i = 0; i < 40; ++i) {
      c.push_back(i);
      c.push_back(j);
      ds.lattice.push_back({i, j});
    }
  ds.cloud = PointCloud(2, c, std::vector<int>(1600, 1));
  auto idx = sublattice_indices(ds, 2);
  CHECK(idx.size() == 400);
  auto sub = ds.cloud.subset(idx);
  auto dm = pairwise_distances(sub);
  double nearest = 1e9;
  for (std::size_t j = 1; j < sub.size(); ++j) nearest = std::min(nearest, dm(0, j));
  CHECK(nearest == 2.0);
  CHECK(filter_class(ds, idx, 0).empty());
}
