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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "sltlab/data.hpp"

using namespace sltlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "sltlab_data_tests";
  fs::create_directories(p);
  return p;
}

// 3 tiny 2x2 "images" with distinct byte values so quantization round-trips.
Dataset tiny_images() {
  Dataset d;
  d.rows = 2;
  d.cols = 2;
  d.num_classes = 3;
  d.inputs = Matrix(3, 4);
  int byte = 0;
  for (auto& v : d.inputs.data) v = static_cast<double>(byte++ * 20) / 255.0;
  d.labels = {0, 1, 2};
  return d;
}

}  // namespace

TEST_CASE("idx save and load round-trips") {
  const auto dir = temp_dir();
  const auto img = dir / "imgs";
  const auto lab = dir / "labs";
  const Dataset d = tiny_images();
  save_idx(d, img, lab);
  const Dataset r = load_idx(img, lab);
  CHECK(r.size() == 3);
  CHECK(r.rows == 2);
  CHECK(r.cols == 2);
  CHECK(r.num_classes == 3);
  CHECK(r.labels == d.labels);
  for (std::size_t i = 0; i < d.inputs.data.size(); ++i)
    CHECK(r.inputs.data[i] == doctest::Approx(d.inputs.data[i]).epsilon(1e-15));
}

TEST_CASE("idx loader rejects malformed files") {
  const auto dir = temp_dir();
  CHECK_THROWS_AS(load_idx(dir / "missing", dir / "missing2"), IoError);

  const auto img = dir / "bad_magic";
  {
    std::ofstream out(img, std::ios::binary);
    const char junk[16] = {0};
    out.write(junk, sizeof junk);
  }
  const auto lab = dir / "labs_ok";
  save_idx(tiny_images(), dir / "imgs_ok", lab);
  CHECK_THROWS_AS(load_idx(img, lab), IoError);

  // truncated payload: valid header claiming more images than present
  const auto trunc = dir / "truncated";
  {
    std::ofstream out(trunc, std::ios::binary);
    const unsigned char header[16] = {0, 0, 8, 3, 0, 0, 0, 9,
                                      0, 0, 0, 2, 0, 0, 0, 2};
    out.write(reinterpret_cast<const char*>(header), 16);
    out.put('x');
  }
  CHECK_THROWS_AS(load_idx(trunc, lab), IoError);
}

TEST_CASE("split is disjoint, exhaustive and seed-stable") {
  Dataset d;
  d.num_classes = 2;
  d.inputs = Matrix(10, 1);
  for (std::size_t i = 0; i < 10; ++i) d.inputs.at(i, 0) = double(i);
  d.labels.assign(10, 0);
  d.labels[3] = 1;

  SplitSpec spec;
  spec.train_count = 6;
  spec.seed = 9;
  const auto sp = split(d, spec);
  CHECK(sp.train.size() == 6);
  CHECK(sp.val.size() == 4);

  std::multiset<double> seen;
  for (std::size_t i = 0; i < 6; ++i) seen.insert(sp.train.inputs.at(i, 0));
  for (std::size_t i = 0; i < 4; ++i) seen.insert(sp.val.inputs.at(i, 0));
  CHECK(seen.size() == 10);
  CHECK(*seen.begin() == 0.0);
  CHECK(*seen.rbegin() == 9.0);

  const auto sp2 = split(d, spec);
  CHECK(sp2.train.inputs.data == sp.train.inputs.data);
  spec.seed = 10;
  const auto sp3 = split(d, spec);
  CHECK(sp3.train.inputs.data != sp.train.inputs.data);

  spec.train_count = 9;
  spec.val_count = 5;
  CHECK_THROWS_AS(split(d, spec), ConfigError);
  spec.train_count = 10;
  spec.val_count = 0;
  CHECK_THROWS_AS(split(d, spec), ConfigError);
}

TEST_CASE("epoch batches partition the dataset") {
  Dataset d;
  d.num_classes = 2;
  d.inputs = Matrix(10, 1);
  for (std::size_t i = 0; i < 10; ++i) d.inputs.at(i, 0) = double(i);
  d.labels.assign(10, 1);

  const auto bs = batches(d, 4, 3, 1);
  REQUIRE(bs.size() == 3);
  CHECK(bs[0].size() == 4);
  CHECK(bs[1].size() == 4);
  CHECK(bs[2].size() == 2);  // short tail kept

  std::multiset<double> seen;
  for (const auto& b : bs)
    for (std::size_t i = 0; i < b.size(); ++i) seen.insert(b.inputs.at(i, 0));
  CHECK(seen.size() == 10);

  const auto again = batches(d, 4, 3, 1);
  CHECK(again[0].inputs.data == bs[0].inputs.data);
  const auto other_epoch = batches(d, 4, 3, 2);
  CHECK(other_epoch[0].inputs.data != bs[0].inputs.data);
}

TEST_CASE("downsample block-averages") {
  Dataset d;
  d.num_classes = 2;
  d.rows = 4;
  d.cols = 4;
  d.inputs = Matrix(1, 16);
  for (std::size_t i = 0; i < 16; ++i) d.inputs.data[i] = double(i + 1);
  d.labels = {1};

  const Dataset out = downsample(d, 2);
  CHECK(out.rows == 2);
  CHECK(out.cols == 2);
  CHECK(out.inputs.at(0, 0) == doctest::Approx(3.5));   // 1,2,5,6
  CHECK(out.inputs.at(0, 1) == doctest::Approx(5.5));   // 3,4,7,8
  CHECK(out.inputs.at(0, 2) == doctest::Approx(11.5));  // 9,10,13,14
  CHECK(out.inputs.at(0, 3) == doctest::Approx(13.5));  // 11,12,15,16

  CHECK_THROWS_AS(downsample(d, 3), ConfigError);
  Dataset flat = d;
  flat.rows = flat.cols = 0;
  CHECK_THROWS_AS(downsample(flat, 2), ConfigError);
}

TEST_CASE("subsample draws without replacement") {
  Dataset d;
  d.num_classes = 2;
  d.inputs = Matrix(8, 1);
  for (std::size_t i = 0; i < 8; ++i) d.inputs.at(i, 0) = double(i);
  d.labels.assign(8, 0);

  const Dataset s = subsample(d, 5, 4);
  CHECK(s.size() == 5);
  std::set<double> uniq(s.inputs.data.begin(), s.inputs.data.end());
  CHECK(uniq.size() == 5);
  CHECK_THROWS_AS(subsample(d, 9, 4), ConfigError);
  CHECK_THROWS_AS(subsample(d, 0, 4), ConfigError);
}

TEST_CASE("head batch takes a prefix") {
  Dataset d;
  d.num_classes = 2;
  d.inputs = Matrix(5, 2);
  for (std::size_t i = 0; i < 10; ++i) d.inputs.data[i] = double(i);
  d.labels = {0, 1, 0, 1, 0};
  const Batch b = head_batch(d, 3);
  CHECK(b.size() == 3);
  CHECK(b.inputs.at(2, 1) == 5.0);
  CHECK(head_batch(d, 99).size() == 5);
  CHECK(to_batch(d).size() == 5);
}

TEST_CASE("synthetic blobs sit on hypercube corners") {
  const Dataset d = synthetic_classification(40, 3, 4, 0.0, 6);
  CHECK(d.size() == 40);
  CHECK(d.num_classes == 4);
  std::map<int, std::size_t> counts;
  for (int l : d.labels) ++counts[l];
  CHECK(counts.size() == 4);
  for (const auto& [label, count] : counts) CHECK(count == 10);

  // noise 0: every example sits exactly on its class corner,
  // class c coordinate k = +-1 by bit k of c
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int c = d.labels[i];
    for (std::size_t k = 0; k < 3; ++k) {
      const double expect = (c >> k) & 1 ? 1.0 : -1.0;
      CHECK(d.inputs.at(i, k) == expect);
    }
  }

  CHECK_THROWS_AS(synthetic_classification(10, 2, 5, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(synthetic_classification(0, 2, 2, 0.1, 1), ConfigError);
  const Dataset noisy = synthetic_classification(40, 3, 4, 0.2, 6);
  CHECK(noisy.inputs.data != d.inputs.data);
  const Dataset again = synthetic_classification(40, 3, 4, 0.2, 6);
  CHECK(noisy.inputs.data == again.inputs.data);
}

TEST_CASE("dataset validation") {
  Dataset d;
  d.num_classes = 2;
  d.inputs = Matrix(3, 2);
  d.labels = {0, 1};
  CHECK_THROWS_AS(d.validate(), ConfigError);  // row/label mismatch
  d.labels = {0, 1, 2};
  CHECK_THROWS_AS(d.validate(), ConfigError);  // label out of range
  d.labels = {0, 1, 1};
  CHECK_NOTHROW(d.validate());
  d.rows = 3;
  d.cols = 3;
  CHECK_THROWS_AS(d.validate(), ConfigError);  // shape mismatch
}
