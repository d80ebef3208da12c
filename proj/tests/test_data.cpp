#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "glearn/data.hpp"
#include "glearn/error.hpp"
#include "support.hpp"

namespace {

using glearn::Matrix;
using glearn::Rng;
using namespace glearn::data;
namespace gt = glearn::testing;

// n samples, all noisy_train, labels uniform over C classes.
Dataset label_only_dataset(std::size_t n, std::size_t C, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.num_classes = C;
  ds.features = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(static_cast<int>(rng.below(C)));
    ds.tags.push_back(SplitTag::noisy_train);
  }
  return ds;
}

TEST(Noise, SymmetricRateAndMask) {
  const auto ds = label_only_dataset(10000, 10, 1);
  const auto noisy = inject_noise(ds, {NoiseModel::symmetric, 0.4, 7, std::nullopt});
  const double rate = static_cast<double>(noisy.mask.count()) / 10000.0;
  EXPECT_GE(rate, 0.39);
  EXPECT_LE(rate, 0.41);
  ASSERT_TRUE(noisy.dataset.true_labels);
  EXPECT_EQ(*noisy.dataset.true_labels, ds.labels);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(noisy.mask.corrupted[i],
              noisy.dataset.labels[i] != (*noisy.dataset.true_labels)[i]);
  }
}

TEST(Noise, SymmetricWrongClassesAreUniform) {
  const auto ds = label_only_dataset(250000, 10, 2);
  const auto noisy = inject_noise(ds, {NoiseModel::symmetric, 0.4, 8, std::nullopt});
  // Per true class, 9 wrong-class cells; summed statistic has 10 * 8 dof.
  std::vector<std::vector<double>> counts(10, std::vector<double>(10, 0.0));
  std::vector<double> per_class(10, 0.0);
  for (std::size_t i : noisy.mask.flipped_indices()) {
    const auto t = static_cast<std::size_t>(ds.labels[i]);
    counts[t][static_cast<std::size_t>(noisy.dataset.labels[i])] += 1.0;
    per_class[t] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(counts[t][t], 0.0);
    const double expect = per_class[t] / 9.0;
    for (std::size_t c = 0; c < 10; ++c) {
      if (c != t) chi2 += (counts[t][c] - expect) * (counts[t][c] - expect) / expect;
    }
  }
  EXPECT_LT(chi2, 112.329);  // chi-square(80) upper 1% point
}

TEST(Noise, PairFlipFollowsMap) {
  const auto ds = label_only_dataset(100000, 5, 3);
  const auto noisy = inject_noise(ds, {NoiseModel::pair_flip, 0.999, 9, std::nullopt});
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (noisy.mask.corrupted[i]) {
      ++flipped;
      EXPECT_EQ(noisy.dataset.labels[i], (ds.labels[i] + 1) % 5);
    }
  }
  EXPECT_GT(static_cast<double>(flipped) / 100000.0, 0.998);
}

TEST(Noise, CustomPairMapAndErrors) {
  const auto ds = label_only_dataset(1000, 3, 4);
  const std::vector<int> map{2, 0, 1};
  const auto noisy = inject_noise(ds, {NoiseModel::pair_flip, 0.5, 1, map});
  for (std::size_t i : noisy.mask.flipped_indices()) {
    EXPECT_EQ(noisy.dataset.labels[i], map[static_cast<std::size_t>(ds.labels[i])]);
  }
  EXPECT_THROW(inject_noise(ds, {NoiseModel::symmetric, 1.0, 1, std::nullopt}),
               glearn::ParameterError);
  EXPECT_THROW(inject_noise(ds, {NoiseModel::symmetric, -0.1, 1, std::nullopt}),
               glearn::ParameterError);
  EXPECT_THROW(inject_noise(ds, {NoiseModel::pair_flip, 0.3, 1, std::vector<int>{0, 1, 2}}),
               glearn::ParameterError);
}

TEST(Noise, ZeroRateAndOnlyNoisySubsetTouched) {
  auto ds = label_only_dataset(2000, 4, 5);
  for (std::size_t i = 0; i < 1000; ++i) ds.tags[i] = SplitTag::clean_train;
  const auto none = inject_noise(ds, {NoiseModel::symmetric, 0.0, 1, std::nullopt});
  EXPECT_EQ(none.mask.count(), 0u);
  const auto noisy = inject_noise(ds, {NoiseModel::symmetric, 0.9, 1, std::nullopt});
  for (std::size_t i = 0; i < 1000; ++i) EXPECT_FALSE(noisy.mask.corrupted[i]);
  EXPECT_GT(noisy.mask.count(), 800u);
}

TEST(Noise, SeedDeterminism) {
  const auto ds = label_only_dataset(500, 10, 6);
  const NoiseSpec spec{NoiseModel::symmetric, 0.4, 3, std::nullopt};
  EXPECT_EQ(inject_noise(ds, spec).dataset, inject_noise(ds, spec).dataset);
  const NoiseSpec other{NoiseModel::symmetric, 0.4, 4, std::nullopt};
  EXPECT_NE(inject_noise(ds, spec).dataset.labels, inject_noise(ds, other).dataset.labels);
}

TEST(Blobs, ShapeLabelsAndCenterScale) {
  const auto ds = make_blobs({4, 50, 6, 0.1, 3});
  EXPECT_EQ(ds.size(), 200u);
  EXPECT_EQ(ds.dim(), 6u);
  EXPECT_EQ(ds.num_classes, 4u);
  ASSERT_TRUE(ds.true_labels);
  EXPECT_EQ(*ds.true_labels, ds.labels);
  // Class means sit near the centers, whose closest pair is one unit apart.
  std::vector<std::vector<double>> mean(4, std::vector<double>(6, 0.0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t k = 0; k < 6; ++k) {
      mean[static_cast<std::size_t>(ds.labels[i])][k] += ds.features(i, k) / 50.0;
    }
  }
  double closest = INFINITY;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < 6; ++k) d2 += (mean[a][k] - mean[b][k]) * (mean[a][k] - mean[b][k]);
      closest = std::min(closest, std::sqrt(d2));
    }
  }
  EXPECT_NEAR(closest, 1.0, 0.1);
  EXPECT_EQ(make_blobs({4, 50, 6, 0.1, 3}), ds);
  EXPECT_THROW(make_blobs({1, 50, 6, 0.1, 3}), glearn::ParameterError);
  EXPECT_THROW(make_blobs({4, 50, 6, 0.0, 3}), glearn::ParameterError);
}

TEST(Split, StratifiedCountsAndNesting) {
  const auto ds = make_blobs({10, 100, 4, 0.2, 1});
  const auto a = split(ds, 0.05, 0.2, 9);
  EXPECT_EQ(a.indices(SplitTag::clean_train).size(), 50u);
  EXPECT_EQ(a.indices(SplitTag::test).size(), 200u);
  EXPECT_EQ(a.indices(SplitTag::noisy_train).size(), 750u);
  std::map<int, int> clean_per_class;
  for (std::size_t i : a.indices(SplitTag::clean_train)) ++clean_per_class[a.labels[i]];
  for (const auto& [c, n] : clean_per_class) EXPECT_EQ(n, 5);

  const auto b = split(ds, 0.2, 0.2, 9);
  EXPECT_EQ(a.indices(SplitTag::test), b.indices(SplitTag::test));
  const auto small = a.indices(SplitTag::clean_train);
  const auto large = b.indices(SplitTag::clean_train);
  EXPECT_TRUE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
}

TEST(Split, Errors) {
  const auto ds = make_blobs({3, 10, 2, 0.2, 1});
  EXPECT_THROW(split(ds, 0.6, 0.5, 1), glearn::ParameterError);
  EXPECT_THROW(split(ds, -0.1, 0.2, 1), glearn::ParameterError);
  EXPECT_THROW(split(ds, 0.01, 0.2, 1), glearn::DataError);
}

TEST(Split, TestLabelsAreTrueLabels) {
  auto ds = make_blobs({3, 40, 2, 0.2, 1});
  auto noisy = inject_noise(ds, {NoiseModel::symmetric, 0.5, 1, std::nullopt}).dataset;
  const auto tagged = split(noisy, 0.1, 0.25, 2);
  for (std::size_t i : tagged.indices(SplitTag::test)) {
    EXPECT_EQ(tagged.labels[i], (*tagged.true_labels)[i]);
  }
}

Dataset tagged_counts(std::size_t noisy, std::size_t clean) {
  Dataset ds;
  ds.num_classes = 2;
  ds.features = Matrix(noisy + clean, 1);
  for (std::size_t i = 0; i < noisy + clean; ++i) {
    ds.labels.push_back(static_cast<int>(i % 2));
    ds.tags.push_back(i < noisy ? SplitTag::noisy_train : SplitTag::clean_train);
  }
  return ds;
}

TEST(MixedIterator, BatchSizesAndCoverage) {
  const auto ds = tagged_counts(100, 32);
  MixedBatchIterator it(ds, 32, 5, 0);
  EXPECT_EQ(it.steps(), 4u);
  std::vector<std::size_t> sizes;
  std::multiset<std::size_t> noisy_seen;
  std::map<std::size_t, int> clean_seen;
  while (!it.done()) {
    const auto pair = it.next();
    sizes.push_back(pair.noisy.size());
    EXPECT_EQ(pair.clean.size(), 32u);
    noisy_seen.insert(pair.noisy.begin(), pair.noisy.end());
    for (std::size_t i : pair.clean) {
      EXPECT_EQ(ds.tags[i], SplitTag::clean_train);
      ++clean_seen[i];
    }
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{32, 32, 32, 4}));
  EXPECT_EQ(noisy_seen.size(), 100u);
  EXPECT_EQ(std::set<std::size_t>(noisy_seen.begin(), noisy_seen.end()).size(), 100u);
  EXPECT_EQ(clean_seen.size(), 32u);
  for (const auto& [i, n] : clean_seen) EXPECT_EQ(n, 4);
  EXPECT_THROW(it.next(), glearn::InputError);
}

TEST(MixedIterator, CleanCyclesWithReshuffle) {
  const auto ds = tagged_counts(60, 6);
  MixedBatchIterator it(ds, 3, 1, 0);
  std::vector<std::size_t> stream;
  while (!it.done()) {
    const auto pair = it.next();
    stream.insert(stream.end(), pair.clean.begin(), pair.clean.end());
  }
  ASSERT_EQ(stream.size(), 60u);
  bool differs = false;
  for (std::size_t w = 0; w < 10; ++w) {
    std::set<std::size_t> wrap(stream.begin() + static_cast<long>(6 * w),
                               stream.begin() + static_cast<long>(6 * w + 6));
    EXPECT_EQ(wrap.size(), 6u);
    if (w > 0 && !std::equal(stream.begin(), stream.begin() + 6,
                             stream.begin() + static_cast<long>(6 * w))) {
      differs = true;
    }
  }
  EXPECT_TRUE(differs);
}

TEST(MixedIterator, DeterministicPerSeedAndEpoch) {
  const auto ds = tagged_counts(50, 10);
  auto collect = [&](std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> out;
    MixedBatchIterator it(ds, 8, seed, epoch);
    while (!it.done()) {
      const auto p = it.next();
      out.insert(out.end(), p.noisy.begin(), p.noisy.end());
      out.insert(out.end(), p.clean.begin(), p.clean.end());
    }
    return out;
  };
  EXPECT_EQ(collect(1, 0), collect(1, 0));
  EXPECT_NE(collect(1, 0), collect(1, 1));
  EXPECT_NE(collect(1, 0), collect(2, 0));
}

TEST(MixedIterator, EmptySubsetsAreConfigErrors) {
  EXPECT_THROW(MixedBatchIterator(tagged_counts(0, 5), 4, 1, 0), glearn::ConfigError);
  EXPECT_THROW(MixedBatchIterator(tagged_counts(5, 0), 4, 1, 0), glearn::ConfigError);
  EXPECT_THROW(MixedBatchIterator(tagged_counts(5, 5), 0, 1, 0), glearn::ParameterError);
}

TEST(ShuffledBatches, KeepsShortBatch) {
  std::vector<std::size_t> idx(10);
  for (std::size_t i = 0; i < 10; ++i) idx[i] = i * 3;
  const auto batches = shuffled_batches(idx, 4, 1, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2].size(), 2u);
  std::set<std::size_t> all;
  for (const auto& b : batches) all.insert(b.begin(), b.end());
  EXPECT_EQ(all, std::set<std::size_t>(idx.begin(), idx.end()));
}

TEST(Csv, WriteReadWriteIsValueIdentical) {
  auto ds = make_blobs({3, 20, 5, 0.3, 4});
  ds = inject_noise(split(ds, 0.1, 0.2, 1), {NoiseModel::symmetric, 0.4, 2, std::nullopt}).dataset;
  const auto dir = gt::temp_dir("csv");
  write_csv(ds, dir / "a.csv");
  const auto back = load_csv(dir / "a.csv");
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.true_labels, ds.true_labels);
  EXPECT_EQ(back.num_classes, 3u);
  write_csv(back, dir / "b.csv");
  EXPECT_EQ(gt::slurp(dir / "a.csv"), gt::slurp(dir / "b.csv"));
}

TEST(Csv, ParsesHeaderAnywhereAndReportsErrors) {
  const auto dir = gt::temp_dir("csv-errors");
  gt::spit(dir / "ok.csv", "label,x,y\n1,0.5,2\n0,-1e-3,3\n");
  const auto ok = load_csv(dir / "ok.csv");
  EXPECT_EQ(ok.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(ok.features(1, 0), -1e-3);
  EXPECT_EQ(ok.dim(), 2u);
  EXPECT_FALSE(ok.true_labels);

  gt::spit(dir / "nolabel.csv", "x,y\n1,2\n");
  EXPECT_THROW(load_csv(dir / "nolabel.csv"), glearn::FormatError);

  gt::spit(dir / "bad.csv", "x,label\n1,0\nabc,1\n");
  try {
    load_csv(dir / "bad.csv");
    FAIL() << "expected FormatError";
  } catch (const glearn::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }

  gt::spit(dir / "ragged.csv", "x,label\n1,0,4\n");
  EXPECT_THROW(load_csv(dir / "ragged.csv"), glearn::FormatError);

  gt::spit(dir / "neg.csv", "x,label\n1,-1\n");
  EXPECT_THROW(load_csv(dir / "neg.csv"), glearn::DataError);

  gt::spit(dir / "range.csv", "x,label\n1,7\n");
  glearn::data::LoadOptions opts;
  opts.num_classes = 3;
  EXPECT_THROW(load_csv(dir / "range.csv", opts), glearn::DataError);
}

std::string be32(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
          static_cast<char>(v)};
}

TEST(Idx, LoadsImagesAndLabels) {
  const auto dir = gt::temp_dir("idx");
  std::string img = be32(0x803) + be32(2) + be32(2) + be32(2);
  for (unsigned char px : {0, 255, 51, 102, 1, 2, 3, 4}) img.push_back(static_cast<char>(px));
  std::string lab = be32(0x801) + be32(2);
  lab.push_back(3);
  lab.push_back(7);
  gt::spit(dir / "train-images-idx3-ubyte", img);
  gt::spit(dir / "train-labels-idx1-ubyte", lab);

  const auto ds = load_dataset(dir / "train-images-idx3-ubyte", DataFormat::idx);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dim(), 4u);
  EXPECT_EQ(ds.features(0, 1), 1.0);
  EXPECT_EQ(ds.features(0, 2), 0.2);
  EXPECT_EQ(ds.labels, (std::vector<int>{3, 7}));
  EXPECT_EQ(ds.num_classes, 8u);

  gt::spit(dir / "short-images-idx3-ubyte", img.substr(0, img.size() - 1));
  gt::spit(dir / "short-labels-idx1-ubyte", lab);
  EXPECT_THROW(load_dataset(dir / "short-images-idx3-ubyte", DataFormat::idx), glearn::FormatError);

  std::string wrong = img;
  wrong[3] = 0x01;
  gt::spit(dir / "wrong-images-idx3-ubyte", wrong);
  gt::spit(dir / "wrong-labels-idx1-ubyte", lab);
  try {
    load_dataset(dir / "wrong-images-idx3-ubyte", DataFormat::idx);
    FAIL() << "expected FormatError";
  } catch (const glearn::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset 0"), std::string::npos);
  }
}

TEST(Manifest, RoundTripAndReplay) {
  auto ds = make_blobs({3, 30, 2, 0.2, 1});
  const auto tagged = split(ds, 0.1, 0.2, 3);
  const auto noisy = inject_noise(tagged, {NoiseModel::symmetric, 0.4, 3, std::nullopt});
  SplitManifest m;
  m.seed = 3;
  m.noise = {NoiseModel::symmetric, 0.4, 3, std::nullopt};
  m.clean_fraction = 0.1;
  m.test_fraction = 0.2;
  m.tags = noisy.dataset.tags;
  m.flip_indices = noisy.mask.flipped_indices();

  const auto back = manifest_from_string(manifest_to_string(m));
  EXPECT_EQ(back.tags, m.tags);
  EXPECT_EQ(back.flip_indices, m.flip_indices);
  EXPECT_EQ(back.noise.rate, 0.4);

  EXPECT_EQ(apply_manifest(noisy.dataset, back).tags, noisy.dataset.tags);
  // Labels that disagree with the recorded flips are rejected.
  EXPECT_THROW(apply_manifest(ds, back), glearn::ConsistencyError);
  auto truncated = back;
  truncated.tags.pop_back();
  EXPECT_THROW(apply_manifest(noisy.dataset, truncated), glearn::ConsistencyError);
  EXPECT_THROW(manifest_from_string("{}"), glearn::FormatError);
}

TEST(Names, RoundTripAndRejectUnknown) {
  for (auto t : {SplitTag::clean_train, SplitTag::noisy_train, SplitTag::test}) {
    EXPECT_EQ(split_tag_from_string(to_string(t)), t);
  }
  EXPECT_EQ(split_tag_from_string("clean"), SplitTag::clean_train);
  EXPECT_THROW(split_tag_from_string("train"), glearn::ParameterError);
  EXPECT_EQ(noise_model_from_string("pair_flip"), NoiseModel::pair_flip);
  EXPECT_THROW(noise_model_from_string("asymmetric"), glearn::ParameterError);
}

}  // namespace
