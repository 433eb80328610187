#include <unistd.h>

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "scalardyn/dataset.hpp"
#include "scalardyn/eval.hpp"
#include "scalardyn/io.hpp"

namespace scalardyn {
namespace {

const IntegratorConfig kTruth = IntegratorConfig::for_spacing(0.1, 1e-3);

const Dataset& default_dataset() {
  static const Dataset ds = generate_dataset(SystemParams{}, DatasetConfig{}, kTruth);
  return ds;
}

TEST(Dataset, DefaultShape) {
  const Dataset& ds = default_dataset();
  ASSERT_EQ(ds.records.size(), 500u);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const TrajectoryRecord& r = ds.records[i];
    EXPECT_EQ(r.trajectory_id, static_cast<int>(i));
    ASSERT_EQ(r.states.size(), 6u);
    ASSERT_EQ(r.times.size(), 6u);
    EXPECT_EQ(r.times[0], 0.0);
    for (std::size_t j = 1; j < r.times.size(); ++j) EXPECT_GT(r.times[j], r.times[j - 1]);
    for (const PhaseState& s : r.states) EXPECT_TRUE(s.all_finite());
  }
}

TEST(Dataset, SplitIsByPosition) {
  const DatasetSplit split = split_dataset(default_dataset());
  EXPECT_EQ(split.train.size(), 400u);
  EXPECT_EQ(split.test.size(), 100u);
  EXPECT_EQ(split.test.front().trajectory_id, 400);
}

TEST(Dataset, EnergyAndAngularMomentumConserved) {
  const Dataset& ds = default_dataset();
  double worst_h = 0.0, worst_l = 0.0;
  for (const TrajectoryRecord& r : ds.records) {
    const double h0 = hamiltonian(ds.params, r.states[0]);
    const double l0 = angular_momentum_proj(r.states[0], ds.params.g);
    for (const PhaseState& s : r.states) {
      worst_h = std::max(worst_h, std::abs(hamiltonian(ds.params, s) - h0) / std::abs(h0));
      const double dl = std::abs(angular_momentum_proj(s, ds.params.g) - l0);
      worst_l = std::max(worst_l, std::abs(l0) > kLperpAbsoluteThreshold ? dl / std::abs(l0) : dl);
    }
  }
  EXPECT_LE(worst_h, 1e-6);
  EXPECT_LE(worst_l, 1e-6);
}

TEST(Dataset, ZeroSpreadStartsAtEquilibrium) {
  DatasetConfig c;
  c.n_trajectories = 3;
  c.init_position_spread = 0.0;
  c.init_momentum_spread = 0.0;
  const SystemParams p;
  const Dataset ds = generate_dataset(p, c, kTruth);
  const StateVector eq = equilibrium_state(p).to_vector();
  for (const TrajectoryRecord& r : ds.records) {
    EXPECT_EQ(r.states[0].to_vector(), eq);
    for (const PhaseState& s : r.states) EXPECT_LE((s.to_vector() - eq).norm(), 1e-12);
  }
}

TEST(Dataset, DeterministicAndSeedSensitive) {
  DatasetConfig c;
  c.n_trajectories = 20;
  const Dataset a = generate_dataset(SystemParams{}, c, kTruth);
  const Dataset b = generate_dataset(SystemParams{}, c, kTruth);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(dataset_to_string(a), dataset_to_string(b));
  c.seed = 1;
  EXPECT_NE(generate_dataset(SystemParams{}, c, kTruth).records, a.records);
}

TEST(Dataset, PrefixStable) {
  // Trajectory i depends only on (seed, i), not on how many are generated.
  DatasetConfig small;
  small.n_trajectories = 5;
  const Dataset a = generate_dataset(SystemParams{}, small, kTruth);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.records[i], default_dataset().records[i]);
}

TEST(Sampler, MomentsMatchConfiguredSpread) {
  const SystemParams p;
  const DatasetConfig c;
  const StateVector eq = equilibrium_state(p).to_vector();
  constexpr int n = 10000;
  StateVector sum = StateVector::Zero(), sq = StateVector::Zero();
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng = trajectory_stream(5, i);
    const StateVector d = sample_initial_state(rng, p, c).to_vector() - eq;
    sum += d;
    sq += d.cwiseProduct(d);
  }
  for (int k = 0; k < kStateDim; ++k) {
    const double sigma = k < 6 ? c.init_position_spread : c.init_momentum_spread;
    EXPECT_LE(std::abs(sum(k) / n), 3.0 * sigma / std::sqrt(double(n))) << k;
    EXPECT_NEAR(std::sqrt(sq(k) / n), sigma, 0.05 * sigma) << k;
  }
}

TEST(DatasetConfig, ValidationNamesField) {
  DatasetConfig c;
  c.n_trajectories = 0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("dataset.n_trajectories"), std::string::npos);
  }
  c = DatasetConfig{};
  c.label_spacing = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

class DatasetFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("scalardyn_ds_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
    DatasetConfig c;
    c.n_trajectories = 10;
    c.seed = 3;
    ds_ = generate_dataset(SystemParams{}, c, kTruth);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
  Dataset ds_;
};

TEST_F(DatasetFileTest, RoundTripIsBitExact) {
  save_dataset(ds_, dir_ / "d.json");
  const Dataset back = load_dataset(dir_ / "d.json");
  EXPECT_EQ(back.records, ds_.records);
  EXPECT_EQ(back.config, ds_.config);
  EXPECT_EQ(back.params.g, ds_.params.g);
  EXPECT_EQ(back.integrator.substeps_per_label, ds_.integrator.substeps_per_label);
  EXPECT_EQ(dataset_to_string(back), read_file(dir_ / "d.json"));
}

TEST_F(DatasetFileTest, TruncatedFileFailsIntegrity) {
  const std::string text = dataset_to_string(ds_);
  write_file_atomic(dir_ / "t.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_dataset(dir_ / "t.json"), DatasetIntegrityError);
}

TEST_F(DatasetFileTest, TamperedPayloadFailsChecksum) {
  std::string text = dataset_to_string(ds_);
  const auto pos = text.find("\"states\":[") + 10;
  text[pos] = text[pos] == '1' ? '2' : '1';
  write_file_atomic(dir_ / "x.json", text);
  EXPECT_THROW(load_dataset(dir_ / "x.json"), DatasetIntegrityError);
}

TEST_F(DatasetFileTest, VersionMismatchNamesBothVersions) {
  auto doc = nlohmann::json::parse(dataset_to_string(ds_));
  doc["schema_version"] = 7;
  try {
    dataset_from_string(doc.dump());
    FAIL();
  } catch (const DatasetVersionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos);
    EXPECT_NE(msg.find(std::to_string(kDatasetSchemaVersion)), std::string::npos);
  }
}

TEST_F(DatasetFileTest, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset(dir_ / "nope.json"), IoError);
}

}  // namespace
}  // namespace scalardyn
