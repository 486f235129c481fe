#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "gflme/dataset.hpp"

using namespace gflme;

namespace {

const std::string kFixtures = std::string(GFLME_SOURCE_DIR) + "/data/fixtures";

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("golden two-subject fixture loads field by field") {
  const GflmDataset ds = load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                      kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  REQUIRE(ds.n() == 2);
  REQUIRE(ds.subject_ids == std::vector<long long>{101, 205});
  REQUIRE(ds.W1.n_replicates == 2);
  REQUIRE(ds.W1.grid.size() == 3);
  REQUIRE(ds.W1.curve(0, 0)(0) == 0.5);
  REQUIRE(ds.W1.curve(0, 0)(2) == 1.0);
  REQUIRE(ds.W1.curve(0, 1)(1) == 0.8);
  REQUIRE(ds.W1.curve(1, 0)(0) == -0.25);
  REQUIRE(ds.W1.curve(1, 1)(2) == 0.3);
  REQUIRE(ds.W2.values(0, 0) == 2.5);
  REQUIRE(ds.W2.values(1, 1) == 2.1);
  REQUIRE(ds.y(0) == 1.0);
  REQUIRE(ds.y(1) == 0.0);
  REQUIRE(ds.z_labels == std::vector<std::string>{"age", "female"});
  REQUIRE(ds.Z(0, 0) == 52.0);
  REQUIRE(ds.Z(1, 1) == 0.0);
  REQUIRE_FALSE(ds.has_truth);
}

TEST_CASE("row order does not matter") {
  const GflmDataset a = load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                     kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  const GflmDataset b =
      load_dataset(kFixtures + "/functional_shuffled.csv", kFixtures + "/scalar.csv",
                   kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  REQUIRE(a.W1.values == b.W1.values);
  REQUIRE(a.W2.values == b.W2.values);
  REQUIRE(a.y == b.y);
  REQUIRE(a.Z == b.Z);
}

TEST_CASE("save and load round trip preserves the dataset") {
  const GflmDataset ds = load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                      kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string f = (dir / "gflme_rt_f.csv").string();
  const std::string s = (dir / "gflme_rt_s.csv").string();
  const std::string o = (dir / "gflme_rt_o.csv").string();
  save_dataset(ds, f, s, o);
  const GflmDataset back = load_dataset(f, s, o, 0, Family::BinomialLogit);
  REQUIRE(back.subject_ids == ds.subject_ids);
  REQUIRE(back.W1.values == ds.W1.values);
  REQUIRE(back.W2.values == ds.W2.values);
  REQUIRE(back.y == ds.y);
  REQUIRE(back.Z == ds.Z);
  REQUIRE(back.z_labels == ds.z_labels);
}

TEST_CASE("orphan subject ids fail loudly") {
  const std::string scalar_missing = temp_file("gflme_orphan_s.csv",
                                               "subject_id,replicate,value\n"
                                               "101,1,2.5\n101,2,2.7\n");
  REQUIRE_THROWS_WITH(
      load_dataset(kFixtures + "/functional.csv", scalar_missing,
                   kFixtures + "/outcomes.csv", 0, Family::BinomialLogit),
      Catch::Matchers::ContainsSubstring("205"));

  const std::string outcomes_extra = temp_file("gflme_orphan_o.csv",
                                               "subject_id,y,age,female\n"
                                               "101,1,52,1\n205,0,37,0\n300,1,44,1\n");
  REQUIRE_THROWS_AS(load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                 outcomes_extra, 0, Family::BinomialLogit),
                    DataError);
}

TEST_CASE("missing time points are reported with the offending block") {
  const std::string functional_gap = temp_file("gflme_gap_f.csv",
                                               "subject_id,replicate,time_index,value\n"
                                               "101,1,0,0.5\n101,1,1,0.75\n101,1,2,1\n"
                                               "101,2,0,0.55\n101,2,1,0.8\n101,2,2,0.95\n"
                                               "205,1,0,-0.25\n101,1,0,0\n");
  // duplicate cell
  REQUIRE_THROWS_AS(load_dataset(functional_gap, kFixtures + "/scalar.csv",
                                 kFixtures + "/outcomes.csv", 0, Family::BinomialLogit),
                    DataError);

  const std::string functional_missing = temp_file("gflme_missing_f.csv",
                                                   "subject_id,replicate,time_index,value\n"
                                                   "101,1,0,0.5\n101,1,1,0.75\n101,1,2,1\n"
                                                   "101,2,0,0.55\n101,2,1,0.8\n101,2,2,0.95\n"
                                                   "205,1,0,-0.25\n205,1,1,0\n205,1,2,0.25\n"
                                                   "205,2,0,-0.2\n205,2,2,0.3\n");
  REQUIRE_THROWS_WITH(load_dataset(functional_missing, kFixtures + "/scalar.csv",
                                   kFixtures + "/outcomes.csv", 0, Family::BinomialLogit),
                      Catch::Matchers::ContainsSubstring("subject 205") &&
                          Catch::Matchers::ContainsSubstring("replicate 2"));
}

TEST_CASE("non-binary outcomes are rejected under the binomial family") {
  const std::string bad_outcomes = temp_file("gflme_bad_y.csv",
                                             "subject_id,y,age,female\n"
                                             "101,0.25,52,1\n205,0,37,0\n");
  REQUIRE_THROWS_AS(load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                 bad_outcomes, 0, Family::BinomialLogit),
                    DataError);
  // the same file is fine under the gaussian family
  REQUIRE_NOTHROW(load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                               bad_outcomes, 0, Family::GaussianIdentity));
}

TEST_CASE("truth attachment requires aligned single-replicate files") {
  GflmDataset ds = load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  const std::string tf = temp_file("gflme_truth_f.csv",
                                   "subject_id,replicate,time_index,value\n"
                                   "101,1,0,0.5\n101,1,1,0.7\n101,1,2,0.9\n"
                                   "205,1,0,-0.2\n205,1,1,0\n205,1,2,0.2\n");
  const std::string ts = temp_file("gflme_truth_s.csv",
                                   "subject_id,replicate,value\n101,1,2.6\n205,1,2.0\n");
  attach_truth(ds, tf, ts);
  REQUIRE(ds.has_truth);
  REQUIRE(ds.X1_true(0, 1) == 0.7);
  REQUIRE(ds.X2_true(1) == 2.0);

  GflmDataset ds2 = load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                 kFixtures + "/outcomes.csv", 0, Family::BinomialLogit);
  REQUIRE_THROWS_AS(attach_truth(ds2, kFixtures + "/functional.csv", ts), DataError);
}

TEST_CASE("random id corruption always fails the strict join") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    // corrupt one subject id in the scalar file
    const long long bad_id = 1000 + static_cast<long long>(rng() % 9000);
    std::string content = "subject_id,replicate,value\n";
    const bool corrupt_first = rng() % 2 == 0;
    content += (corrupt_first ? std::to_string(bad_id) : "101") + ",1,2.5\n";
    content += (corrupt_first ? std::to_string(bad_id) : "101") + ",2,2.7\n";
    content += (!corrupt_first ? std::to_string(bad_id) : "205") + ",1,1.9\n";
    content += (!corrupt_first ? std::to_string(bad_id) : "205") + ",2,2.1\n";
    const std::string path = temp_file("gflme_corrupt_s.csv", content);
    REQUIRE_THROWS_AS(load_dataset(kFixtures + "/functional.csv", path,
                                   kFixtures + "/outcomes.csv", 0, Family::BinomialLogit),
                      DataError);
  }
}

TEST_CASE("grid spec override validates the largest index") {
  REQUIRE_NOTHROW(load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                               kFixtures + "/outcomes.csv", 3, Family::BinomialLogit));
  REQUIRE_THROWS_AS(load_dataset(kFixtures + "/functional.csv", kFixtures + "/scalar.csv",
                                 kFixtures + "/outcomes.csv", 2, Family::BinomialLogit),
                    DataError);
}
