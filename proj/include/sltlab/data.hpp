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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sltlab/common.hpp"
#include "sltlab/nn.hpp"

namespace sltlab {

/// Labeled examples with inputs flattened to doubles (image pixels are
/// scaled to [0, 1] on load). rows/cols keep the image shape when there is
/// one (0 otherwise).
struct Dataset {
  Matrix inputs;            // n x (rows*cols) or n x feature_dim
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return inputs.cols; }
  void validate() const;
};

/// Reads an IDX image/label file pair (the layout used for handwritten-digit
/// corpora: big-endian magic + dims, then raw uint8 payload). Pixel values
/// are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels);

/// Writes the dataset back out as an IDX pair, re-quantizing inputs to uint8
/// as round(255 * x). Requires an image shape.
void save_idx(const Dataset& data, const std::filesystem::path& images,
              const std::filesystem::path& labels);

/// Block-average pooling by an integer factor that must divide both sides.
Dataset downsample(const Dataset& data, std::size_t factor);

/// First `count` examples of a seeded shuffle (sampling without replacement).
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t val_count = 0;  // 0: everything left after train_count
  std::uint64_t seed = 0;
};

struct TrainValSplit {
  Dataset train;
  Dataset val;
};

/// Disjoint train/validation split after a seeded shuffle.
TrainValSplit split(const Dataset& data, const SplitSpec& spec);

/// Minibatches for one epoch: a seeded shuffle (derived from seed and epoch)
/// chopped into consecutive batches; a short final batch is kept.
std::vector<Batch> batches(const Dataset& data, std::size_t batch_size,
                           std::uint64_t seed, std::size_t epoch);

/// The first min(count, n) examples, unshuffled. Used as the fixed batch on
/// which curvature and sampler metrics are evaluated during training.
Batch head_batch(const Dataset& data, std::size_t count);

Batch to_batch(const Dataset& data);

/// Gaussian blobs centered on distinct corners of the {-1,1}^dim hypercube,
/// labels balanced round-robin. Needs classes <= 2^dim.
Dataset synthetic_classification(std::size_t n, std::size_t dim,
                                 std::size_t classes, double noise,
                                 std::uint64_t seed);

}  // namespace sltlab
