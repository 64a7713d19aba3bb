#include "nextterm/transcript.hpp"

#include <algorithm>
#include <random>
#include <string>

#include <gtest/gtest.h>

namespace nextterm {
namespace {

std::string csv(const std::string& body) { return std::string(kTranscriptHeader) + "\n" + body; }

TEST(ParseTranscript, MapsFieldsDirectly) {
  const auto recs = parse_transcript(csv("s1,BPTMI01,2010-1,15\n"));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].student_id, "s1");
  EXPECT_EQ(recs[0].course_id, "BPTMI01");
  EXPECT_EQ(recs[0].period, "2010-1");
  EXPECT_EQ(recs[0].grade, Grade::numeric(15));
}

TEST(ParseTranscript, WithdrawalToken) {
  const auto recs = parse_transcript(csv("s1,BPTMI01,2010-1,R\n"));
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_TRUE(recs[0].grade.is_withdrawal());
}

TEST(ParseTranscript, GradeOutOfRangeIsValidationError) {
  EXPECT_THROW(parse_transcript(csv("s1,BPTMI01,2010-1,21\n")), ValidationError);
  EXPECT_THROW(parse_transcript(csv("s1,BPTMI01,2010-1,-1\n")), ValidationError);
  EXPECT_THROW(parse_transcript(csv("s1,BPTMI01,2010-1,r\n")), ValidationError);
  EXPECT_THROW(parse_transcript(csv("s1,BPTMI01,2010-1,12.5\n")), ValidationError);
  EXPECT_THROW(parse_transcript(csv("s1,BPTMI01,2010-1,\n")), ValidationError);
}

TEST(ParseTranscript, WrongColumnCountReportsLine) {
  try {
    parse_transcript(csv("s1,A,2010-1,15\ns1,B,2010-1\n"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_transcript(csv("s1,A,2010-1,15,extra\n")), ParseError);
}

TEST(ParseTranscript, DuplicateKeyIsValidationError) {
  EXPECT_THROW(parse_transcript(csv("s1,A,2010-1,15\ns1,A,2010-1,9\n")), ValidationError);
  // same course, different period is a retake and fine
  EXPECT_EQ(parse_transcript(csv("s1,A,2010-1,5\ns1,A,2010-2,15\n")).size(), 2u);
}

TEST(ParseTranscript, RequiresHeader) {
  EXPECT_THROW(parse_transcript(std::string("s1,A,2010-1,15\n")), ParseError);
  EXPECT_THROW(parse_transcript(std::string("")), ParseError);
}

TEST(ParseTranscript, PreservesRowOrderAndToleratesCrlf) {
  const auto recs = parse_transcript(csv("s2,B,2011-1,3\r\ns1,A,2010-1,R\r\n\n"));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].student_id, "s2");
  EXPECT_EQ(recs[1].student_id, "s1");
}

TEST(ParseTranscript, SerializeRoundTripProperty) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> grade(-1, 20);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<RawRecord> recs;
    for (int k = 0; k < 30; ++k) {
      const int g = grade(rng);
      recs.push_back({"s" + std::to_string(k % 7), "C" + std::to_string(k), "20" + std::to_string(10 + k % 5) + "-1",
                      g < 0 ? Grade::withdrawn() : Grade::numeric(g)});
    }
    EXPECT_EQ(parse_transcript(serialize_transcript(recs)), recs);
  }
}

TEST(BucketGrade, Boundaries) {
  EXPECT_EQ(bucket_grade(Grade::numeric(9)), GradeCategory::NotApproved);
  EXPECT_EQ(bucket_grade(Grade::numeric(10)), GradeCategory::Bad);
  EXPECT_EQ(bucket_grade(Grade::numeric(12)), GradeCategory::Bad);
  EXPECT_EQ(bucket_grade(Grade::numeric(13)), GradeCategory::Excellent);
  EXPECT_EQ(bucket_grade(Grade::withdrawn()), GradeCategory::Withdraw);
}

TEST(BucketGrade, PartitionsTheDomain) {
  for (int g = kMinGrade; g <= kMaxGrade; ++g) {
    const auto c = bucket_grade(Grade::numeric(g));
    const auto expected = g <= 9 ? GradeCategory::NotApproved : g <= 12 ? GradeCategory::Bad : GradeCategory::Excellent;
    EXPECT_EQ(c, expected) << "grade " << g;
  }
  EXPECT_EQ(category_index(GradeCategory::Withdraw), 0u);
  EXPECT_EQ(category_index(GradeCategory::NotApproved), 1u);
  EXPECT_EQ(category_index(GradeCategory::Bad), 2u);
  EXPECT_EQ(category_index(GradeCategory::Excellent), 3u);
}

TEST(IsPassing, OnlyBadAndExcellentPass) {
  EXPECT_TRUE(is_passing(GradeCategory::Excellent));
  EXPECT_TRUE(is_passing(GradeCategory::Bad));
  EXPECT_FALSE(is_passing(GradeCategory::NotApproved));
  EXPECT_FALSE(is_passing(GradeCategory::Withdraw));
}

TEST(BuildCatalog, SortsLexicographically) {
  std::vector<RawRecord> recs = {{"s1", "B", "p", Grade::numeric(1)}, {"s1", "A", "p", Grade::numeric(1)}};
  const auto cat = build_catalog(recs);
  ASSERT_EQ(cat.size(), 2u);
  EXPECT_EQ(cat.index_of("A"), 0u);
  EXPECT_EQ(cat.index_of("B"), 1u);
  EXPECT_THROW(cat.index_of("Z"), UnknownCourseError);
}

TEST(BuildCatalog, Singleton) {
  std::vector<RawRecord> recs = {{"s1", "X", "p", Grade::numeric(1)}, {"s2", "X", "p", Grade::numeric(1)}};
  const auto cat = build_catalog(recs);
  ASSERT_EQ(cat.size(), 1u);
  EXPECT_EQ(cat.index_of("X"), 0u);
}

TEST(BuildCatalog, InvariantUnderPermutation) {
  std::vector<RawRecord> recs;
  for (int k = 0; k < 50; ++k) recs.push_back({"s" + std::to_string(k), "C" + std::to_string(k * 7 % 13), "p", Grade::numeric(5)});
  const auto ref = build_catalog(recs);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(recs.begin(), recs.end(), rng);
    EXPECT_EQ(build_catalog(recs), ref);
  }
}

TEST(BuildCatalog, EmptyInputIsError) {
  EXPECT_THROW(build_catalog(std::vector<RawRecord>{}), ValidationError);
}

}  // namespace
}  // namespace nextterm
