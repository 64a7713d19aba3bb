#include "nextterm/checkpoint.hpp"

#include <filesystem>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace nextterm {
namespace {

Checkpoint sample_checkpoint(std::uint64_t seed = 1) {
  const CourseCatalog catalog({"A", "B", "C"});
  return {testing::random_params(ModelDims{3, 4, 2, 5}, seed), catalog, {{"A", 0.1}, {"B", 0.45}, {"C", 1.0 / 3.0}}};
}

TEST(Checkpoint, SerializeParseSerializeIsByteIdentical) {
  const auto ck = sample_checkpoint();
  const auto bytes = serialize_checkpoint(ck);
  const auto back = parse_checkpoint(bytes);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.catalog, ck.catalog);
  EXPECT_EQ(back.failure_rates, ck.failure_rates);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
}

TEST(Checkpoint, FileRoundTripAndId) {
  const auto path = std::filesystem::temp_directory_path() / "nextterm_checkpoint_test.json";
  const auto ck = sample_checkpoint();
  save_checkpoint(path, ck);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(read_file(path), serialize_checkpoint(ck));
  EXPECT_EQ(checkpoint_id(back), checkpoint_id(ck));
  EXPECT_EQ(checkpoint_id(ck).size(), 16u);
  EXPECT_NE(checkpoint_id(sample_checkpoint(2)), checkpoint_id(ck));
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), IoError);
}

TEST(Checkpoint, FailureRatesAreOptional) {
  auto ck = sample_checkpoint();
  ck.failure_rates.clear();
  const auto doc = checkpoint_to_json(ck);
  EXPECT_FALSE(doc.contains("failure_rates"));
  EXPECT_TRUE(parse_checkpoint(doc.dump()).failure_rates.empty());
}

TEST(Checkpoint, RejectsMalformedDocuments) {
  const auto good = checkpoint_to_json(sample_checkpoint());
  EXPECT_THROW(parse_checkpoint("{"), ValidationError);
  EXPECT_THROW(parse_checkpoint("[]"), ValidationError);

  auto doc = good;
  doc["version"] = 2;
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["tensors"]["merge.W"]["rows"] = 4;
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["tensors"]["out.b"]["data"].push_back(0.0);
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["tensors"].erase("fwd.U_g");
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["tensors"]["extra"] = doc["tensors"]["out.b"];
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["catalog"].push_back("D");
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);

  doc = good;
  doc["dims"]["H"] = 0;
  EXPECT_THROW(checkpoint_from_json(doc), ValidationError);
}

}  // namespace
}  // namespace nextterm
