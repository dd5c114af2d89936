#include "actland/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>

#include "actland/error.hpp"
#include "actland/random.hpp"

namespace actland {

void DisksConfig::validate() const {
  if (!(lattice_spacing > 0.0)) throw Error(ErrorCode::ConfigInvalid, "lattice spacing must be positive");
  if (!(outer_radius > 0.0) || !(small_disk_radius > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "radii must be positive");
  }
  for (std::size_t a = 0; a < small_disk_centers.size(); ++a) {
    const auto& c = small_disk_centers[a];
    if (std::hypot(c[0], c[1]) + small_disk_radius > outer_radius) {
      throw Error(ErrorCode::ConfigInvalid, "small disk " + std::to_string(a) + " leaves the outer disk");
    }
    for (std::size_t b = a + 1; b < small_disk_centers.size(); ++b) {
      const auto& d = small_disk_centers[b];
      if (std::hypot(c[0] - d[0], c[1] - d[1]) <= 2.0 * small_disk_radius) {
        throw Error(ErrorCode::ConfigInvalid, "small disks " + std::to_string(a) + " and " +
                                                  std::to_string(b) + " overlap");
      }
    }
  }
}

LabeledDataset generate_disks(const DisksConfig& cfg) {
  cfg.validate();
  // Boundary points count as inside; the slack absorbs i * spacing rounding.
  constexpr double kSlack = 1e-9;
  const double s = cfg.lattice_spacing;
  const int reach = static_cast<int>(std::floor(cfg.outer_radius / s + kSlack));
  std::vector<double> coords;
  std::vector<int> labels;
  LabeledDataset ds;
  for (int j = -reach; j <= reach; ++j) {
    for (int i = -reach; i <= reach; ++i) {
      const double x = i * s;
      const double y = j * s;
      if (std::hypot(x, y) > cfg.outer_radius + kSlack) continue;
      int label = kComplementClass;
      for (const auto& c : cfg.small_disk_centers) {
        if (std::hypot(x - c[0], y - c[1]) <= cfg.small_disk_radius + kSlack) {
          label = kDiskClass;
          break;
        }
      }
      coords.push_back(x);
      coords.push_back(y);
      labels.push_back(label);
      ds.lattice.push_back({i, j});
    }
  }
  ds.cloud = PointCloud(2, std::move(coords), std::move(labels));
  ds.class_names = {"disks", "complement"};
  return ds;
}

namespace {

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::TruncatedFile, "IDX header cut short");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::vector<std::uint8_t> read_payload(std::istream& in, std::size_t bytes) {
  std::vector<std::uint8_t> data(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes))) {
    throw Error(ErrorCode::TruncatedFile, "IDX payload shorter than its header claims");
  }
  return data;
}

}  // namespace

IdxImages read_idx_images(std::istream& in) {
  const auto magic = read_be32(in);
  if (magic != kImageMagic) {
    throw Error(ErrorCode::BadMagic, "image file magic " + std::to_string(magic) + ", expected 2051");
  }
  IdxImages img;
  img.count = read_be32(in);
  img.rows = read_be32(in);
  img.cols = read_be32(in);
  img.pixels = read_payload(in, std::size_t{img.count} * img.rows * img.cols);
  return img;
}

std::vector<std::uint8_t> read_idx_labels(std::istream& in) {
  const auto magic = read_be32(in);
  if (magic != kLabelMagic) {
    throw Error(ErrorCode::BadMagic, "label file magic " + std::to_string(magic) + ", expected 2049");
  }
  const auto count = read_be32(in);
  return read_payload(in, count);
}

void write_idx_images(std::ostream& out, const IdxImages& images) {
  write_be32(out, kImageMagic);
  write_be32(out, images.count);
  write_be32(out, images.rows);
  write_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels) {
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img_in(images_path, std::ios::binary);
  if (!img_in) throw Error(ErrorCode::Io, "cannot open " + images_path);
  std::ifstream lab_in(labels_path, std::ios::binary);
  if (!lab_in) throw Error(ErrorCode::Io, "cannot open " + labels_path);
  const IdxImages img = read_idx_images(img_in);
  const auto labels = read_idx_labels(lab_in);
  if (labels.size() != img.count) {
    throw Error(ErrorCode::CountMismatch, std::to_string(img.count) + " images but " +
                                              std::to_string(labels.size()) + " labels");
  }
  if (img.count == 0) throw Error(ErrorCode::InvalidInput, "IDX file holds no images");
  std::vector<double> coords(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), coords.begin(),
                 [](std::uint8_t p) { return static_cast<double>(p) / 255.0; });
  std::vector<int> ids(labels.begin(), labels.end());
  LabeledDataset ds;
  ds.cloud = PointCloud(std::size_t{img.rows} * img.cols, std::move(coords), std::move(ids));
  for (int d = 0; d < 10; ++d) ds.class_names.push_back(std::to_string(d));
  return ds;
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (size > n) {
    throw Error(ErrorCode::SizeExceeded, "subset of " + std::to_string(size) + " from " +
                                             std::to_string(n) + " points");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Split split_and_subsample(const LabeledDataset& ds, double train_fraction,
                          std::size_t subsample_size, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.cloud.size();
  if (subsample_size > n) {
    throw Error(ErrorCode::SizeExceeded, "batch of " + std::to_string(subsample_size) +
                                             " exceeds " + std::to_string(n) + " points");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  split.batch = random_subset(n, subsample_size, mix_seed(seed, 1));
  return split;
}

std::vector<std::size_t> sublattice_indices(const LabeledDataset& ds, int stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidInput, "stride must be >= 1");
  if (ds.lattice.size() != ds.cloud.size()) {
    throw Error(ErrorCode::InvalidInput, "dataset has no lattice coordinates");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.lattice.size(); ++i) {
    if (ds.lattice[i][0] % stride == 0 && ds.lattice[i][1] % stride == 0) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> filter_class(const LabeledDataset& ds, const std::vector<std::size_t>& indices,
                                      int class_id) {
  std::vector<std::size_t> out;
  for (auto i : indices) {
    if (ds.cloud.labels().at(i) == class_id) out.push_back(i);
  }
  return out;
}

}  // namespace actland
