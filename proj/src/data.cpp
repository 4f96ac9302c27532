// Copyright 2026 The sltlab Authors
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

#include "sltlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace sltlab {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw IoError("truncated idx file while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
      static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

Dataset take(const Dataset& data, std::span<const std::size_t> idx) {
  Dataset out;
  out.num_classes = data.num_classes;
  out.rows = data.rows;
  out.cols = data.cols;
  out.inputs = Matrix(idx.size(), data.inputs.cols);
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = data.inputs.row_span(idx[i]);
    std::copy(src.begin(), src.end(),
              out.inputs.data.begin() +
                  static_cast<std::ptrdiff_t>(i * out.inputs.cols));
    out.labels[i] = data.labels[idx[i]];
  }
  return out;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

}  // namespace

void Dataset::validate() const {
  if (inputs.rows != labels.size())
    throw ConfigError("dataset has " + std::to_string(inputs.rows) +
                      " input rows but " + std::to_string(labels.size()) +
                      " labels");
  if (num_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(num_classes))
      throw ConfigError("dataset label " + std::to_string(labels[i]) +
                        " at row " + std::to_string(i) + " outside [0, " +
                        std::to_string(num_classes) + ")");
  }
  if (rows * cols != 0 && rows * cols != inputs.cols)
    throw ConfigError("dataset image shape does not match feature dim");
}

Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw IoError("cannot open " + images.string());
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw IoError("cannot open " + labels.string());

  if (read_u32_be(img, "image magic") != kImagesMagic)
    throw IoError(images.string() + " is not an idx image file");
  const std::size_t n = read_u32_be(img, "image count");
  const std::size_t rows = read_u32_be(img, "image rows");
  const std::size_t cols = read_u32_be(img, "image cols");

  if (read_u32_be(lab, "label magic") != kLabelsMagic)
    throw IoError(labels.string() + " is not an idx label file");
  const std::size_t nl = read_u32_be(lab, "label count");
  if (nl != n)
    throw IoError("idx pair mismatch: " + std::to_string(n) + " images vs " +
                  std::to_string(nl) + " labels");
  if (n == 0) throw IoError(images.string() + " contains no images");

  Dataset out;
  out.rows = rows;
  out.cols = cols;
  out.inputs = Matrix(n, rows * cols);
  out.labels.resize(n);

  std::vector<unsigned char> buf(rows * cols);
  for (std::size_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size())))
      throw IoError("truncated image payload in " + images.string());
    double* dst = out.inputs.data.data() + i * out.inputs.cols;
    for (std::size_t k = 0; k < buf.size(); ++k)
      dst[k] = static_cast<double>(buf[k]) / 255.0;
  }
  std::vector<unsigned char> lbuf(n);
  if (!lab.read(reinterpret_cast<char*>(lbuf.data()),
                static_cast<std::streamsize>(n)))
    throw IoError("truncated label payload in " + labels.string());
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = static_cast<int>(lbuf[i]);
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = static_cast<std::size_t>(max_label) + 1;
  out.validate();
  return out;
}

void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels) {
  data.validate();
  if (data.rows * data.cols == 0)
    throw ConfigError("save_idx needs an image-shaped dataset");
  std::ofstream img(images, std::ios::binary);
  if (!img) throw IoError("cannot write " + images.string());
  write_u32_be(img, kImagesMagic);
  write_u32_be(img, static_cast<std::uint32_t>(data.size()));
  write_u32_be(img, static_cast<std::uint32_t>(data.rows));
  write_u32_be(img, static_cast<std::uint32_t>(data.cols));
  std::vector<unsigned char> buf(data.inputs.cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* src = data.inputs.data.data() + i * data.inputs.cols;
    for (std::size_t k = 0; k < buf.size(); ++k) {
      const double q = std::round(src[k] * 255.0);
      buf[k] = static_cast<unsigned char>(std::clamp(q, 0.0, 255.0));
    }
    img.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!img) throw IoError("failed writing " + images.string());

  std::ofstream lab(labels, std::ios::binary);
  if (!lab) throw IoError("cannot write " + labels.string());
  write_u32_be(lab, kLabelsMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) {
    const unsigned char b = static_cast<unsigned char>(l);
    lab.write(reinterpret_cast<const char*>(&b), 1);
  }
  if (!lab) throw IoError("failed writing " + labels.string());
}

Dataset downsample(const Dataset& data, std::size_t factor) {
  data.validate();
  if (factor == 0) throw ConfigError("downsample factor must be > 0");
  if (factor == 1) return data;
  if (data.rows * data.cols == 0)
    throw ConfigError("downsample needs an image-shaped dataset");
  if (data.rows % factor != 0 || data.cols % factor != 0)
    throw ConfigError("downsample factor " + std::to_string(factor) +
                      " does not divide " + std::to_string(data.rows) + "x" +
                      std::to_string(data.cols));
  Dataset out;
  out.num_classes = data.num_classes;
  out.labels = data.labels;
  out.rows = data.rows / factor;
  out.cols = data.cols / factor;
  out.inputs = Matrix(data.size(), out.rows * out.cols);
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* src = data.inputs.data.data() + i * data.inputs.cols;
    double* dst = out.inputs.data.data() + i * out.inputs.cols;
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t c = 0; c < out.cols; ++c) {
        double acc = 0.0;
        for (std::size_t dr = 0; dr < factor; ++dr)
          for (std::size_t dc = 0; dc < factor; ++dc)
            acc += src[(r * factor + dr) * data.cols + (c * factor + dc)];
        dst[r * out.cols + c] = acc * inv;
      }
    }
  }
  return out;
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  data.validate();
  if (count == 0 || count > data.size())
    throw ConfigError("subsample count " + std::to_string(count) +
                      " outside [1, " + std::to_string(data.size()) + "]");
  auto idx = shuffled_indices(data.size(), seed);
  idx.resize(count);
  return take(data, idx);
}

TrainValSplit split(const Dataset& data, const SplitSpec& spec) {
  data.validate();
  if (spec.train_count == 0)
    throw ConfigError("split train_count must be > 0");
  const std::size_t val_count =
      spec.val_count > 0 ? spec.val_count : data.size() - spec.train_count;
  if (spec.train_count + val_count > data.size())
    throw ConfigError("split needs " +
                      std::to_string(spec.train_count + val_count) +
                      " examples but dataset has " +
                      std::to_string(data.size()));
  if (val_count == 0) throw ConfigError("split leaves no validation examples");
  const auto idx = shuffled_indices(data.size(), spec.seed);
  TrainValSplit out;
  out.train = take(data, std::span(idx).subspan(0, spec.train_count));
  out.val = take(data, std::span(idx).subspan(spec.train_count, val_count));
  return out;
}

std::vector<Batch> batches(const Dataset& data, std::size_t batch_size,
                           std::uint64_t seed, std::size_t epoch) {
  data.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
  const auto idx = shuffled_indices(data.size(), derive_seed(seed, epoch));
  std::vector<Batch> out;
  out.reserve((data.size() + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, idx.size() - start);
    Batch b;
    b.inputs = Matrix(len, data.inputs.cols);
    b.labels.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      const auto src = data.inputs.row_span(idx[start + i]);
      std::copy(src.begin(), src.end(),
                b.inputs.data.begin() +
                    static_cast<std::ptrdiff_t>(i * b.inputs.cols));
      b.labels[i] = data.labels[idx[start + i]];
    }
    out.push_back(std::move(b));
  }
  return out;
}

Batch head_batch(const Dataset& data, std::size_t count) {
  data.validate();
  const std::size_t len = std::min(count, data.size());
  if (len == 0) throw ConfigError("head_batch on empty dataset");
  Batch b;
  b.inputs = Matrix(len, data.inputs.cols);
  std::copy(data.inputs.data.begin(),
            data.inputs.data.begin() +
                static_cast<std::ptrdiff_t>(len * data.inputs.cols),
            b.inputs.data.begin());
  b.labels.assign(data.labels.begin(),
                  data.labels.begin() + static_cast<std::ptrdiff_t>(len));
  return b;
}

Batch to_batch(const Dataset& data) { return head_batch(data, data.size()); }

Dataset synthetic_classification(std::size_t n, std::size_t dim,
                                 std::size_t classes, double noise,
                                 std::uint64_t seed) {
  if (n == 0) throw ConfigError("synthetic dataset needs n > 0");
  if (dim == 0) throw ConfigError("synthetic dataset needs dim > 0");
  if (classes < 2) throw ConfigError("synthetic dataset needs >= 2 classes");
  if (dim < 64 && classes > (std::size_t{1} << dim))
    throw ConfigError("cannot place " + std::to_string(classes) +
                      " classes on distinct corners of a " +
                      std::to_string(dim) + "-d hypercube");
  if (!(noise >= 0.0)) throw ConfigError("synthetic noise must be >= 0");

  Dataset out;
  out.num_classes = classes;
  out.inputs = Matrix(n, dim);
  out.labels.resize(n);
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % classes;
    out.labels[i] = static_cast<int>(c);
    double* x = out.inputs.data.data() + i * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      const double corner = (c >> (k % 64)) & 1 ? 1.0 : -1.0;
      x[k] = corner + noise * g(rng);
    }
  }
  return out;
}

}  // namespace sltlab
