#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "../oracles/u_oracle.hpp"
#include "taxotrace/analysis.hpp"
#include "taxotrace/error.hpp"

using namespace taxotrace;
using namespace taxotrace::analysis;

namespace {

const std::vector<CodedAnnotation> kTableV = {
    {"P1", {1, 1, 1, 1, 1, 1, 1, 2, 1, 3}},
    {"P2", {1, 1, 1, 1, 1, 1, 1, 5, 1, 1}},
    {"P3", {1, 1, 1, 1, 1, 1, 1, 5, 1, 1}},
    {"P4", {1, 1, 1, 1, 1, 1, 1, 5, 1, 3}},
};

JudgmentRecord judged(std::string expert, std::string requirement, std::map<std::string, int> points) {
    return {std::move(expert), std::move(requirement), std::move(points)};
}

AnnotationRecord record(std::string participant, Treatment treatment, std::string requirement, double duration,
                        int correct = 0, int complete = 0, std::vector<Association> associations = {}) {
    return {std::move(participant), treatment, std::move(requirement), duration, correct, complete,
            std::move(associations)};
}

}  // namespace

TEST(Median, OddEvenEmpty) {
    EXPECT_DOUBLE_EQ(median({59, 69, 72}), 69.0);
    EXPECT_DOUBLE_EQ(median({179, 59, 72, 69}), 70.5);
    EXPECT_THROW(median({}), Error);
}

TEST(DurationSummary, PerGroup) {
    const std::vector<AnnotationRecord> records = {
        record("P1", Treatment::Ccr, "R1", 72), record("P2", Treatment::Ccr, "R1", 59),
        record("P3", Treatment::Ccr, "R1", 69), record("P5", Treatment::Search, "R1", 105),
        record("P6", Treatment::Search, "R1", 17)};
    const auto summary = duration_summary(records);
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_EQ(summary[0].group, "ccr");
    EXPECT_DOUBLE_EQ(summary[0].median, 69.0);
    EXPECT_EQ(summary[0].count, 3u);
    EXPECT_DOUBLE_EQ(summary[1].median, 61.0);
    EXPECT_THROW(duration_summary({record("P1", Treatment::Ccr, "R1", 1)}), Error);
}

TEST(Accuracy, MeanOfTwoExperts) {
    const auto scores = accuracy_scores({judged("E1", "R1", {{"a", 6}, {"b", 4}}),
                                         judged("E2", "R1", {{"a", 8}, {"b", 2}})});
    ASSERT_EQ(scores.size(), 2u);
    EXPECT_EQ(scores[0].association, "a");
    EXPECT_DOUBLE_EQ(scores[0].mean_points, 7.0);
    EXPECT_DOUBLE_EQ(scores[1].mean_points, 3.0);
}

TEST(Accuracy, ForcedSingleAssociation) {
    const auto scores = accuracy_scores({judged("E1", "R1", {{"a", 10}}), judged("E2", "R1", {{"a", 10}})});
    ASSERT_EQ(scores.size(), 1u);
    EXPECT_DOUBLE_EQ(scores[0].mean_points, 10.0);
}

TEST(Accuracy, ValidationNamesTheOffender) {
    try {
        accuracy_scores({judged("E1", "R4", {{"a", 6}, {"b", 3}}), judged("E2", "R4", {{"a", 10}})});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Validation);
        EXPECT_NE(std::string(e.what()).find("E1"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("R4"), std::string::npos);
    }
    EXPECT_THROW(accuracy_scores({judged("E1", "R1", {{"a", 10}})}), Error);  // one expert only
    EXPECT_THROW(validate_judgments({judged("E1", "R1", {{"a", 12}, {"b", -2}}), judged("E2", "R1", {{"a", 10}})}),
                 Error);
    EXPECT_NO_THROW(accuracy_scores({judged("E1", "R1", {{"a", 10}})}, 1));
}

TEST(Accuracy, MissingAssociationCountsAsZero) {
    const auto scores = accuracy_scores({judged("E1", "R1", {{"a", 10}}), judged("E2", "R1", {{"a", 5}, {"b", 5}})});
    ASSERT_EQ(scores.size(), 2u);
    EXPECT_DOUBLE_EQ(scores[0].mean_points, 7.5);
    EXPECT_DOUBLE_EQ(scores[1].mean_points, 2.5);
}

TEST(Accuracy, ConservationOnRandomJudgments) {
    std::mt19937 rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<JudgmentRecord> records;
        const int requirements = 1 + static_cast<int>(rng() % 5);
        for (int r = 0; r < requirements; ++r) {
            const int associations = 1 + static_cast<int>(rng() % 6);
            for (const char* expert : {"E1", "E2"}) {
                std::map<std::string, int> points;
                int left = kPointsPerRequirement;
                for (int a = 0; a < associations; ++a) {
                    const int p = a + 1 == associations ? left : static_cast<int>(rng() % (left + 1));
                    points["a" + std::to_string(a)] = p;
                    left -= p;
                }
                records.push_back(judged(expert, "R" + std::to_string(r), points));
            }
        }
        std::map<std::string, double> sums;
        for (const auto& s : accuracy_scores(records)) sums[s.requirement_id] += s.mean_points;
        ASSERT_EQ(sums.size(), static_cast<std::size_t>(requirements));
        for (const auto& [id, sum] : sums) EXPECT_NEAR(sum, 10.0, 1e-9) << id;

        const auto buckets = agreement_buckets(records, "E1", "E2");
        std::size_t associations = 0;
        for (const auto& r : records) {
            if (r.expert == "E1") associations += r.points.size();
        }
        EXPECT_EQ(buckets.total(), associations);
    }
}

TEST(Agreement, Buckets) {
    EXPECT_EQ(AgreementBuckets::bucket_of(3, 3), 0u);
    EXPECT_EQ(AgreementBuckets::bucket_of(2, 5), 3u);
    EXPECT_EQ(AgreementBuckets::bucket_of(1, 6), 4u);
    EXPECT_EQ(AgreementBuckets::bucket_of(6, 1), 4u);
    const auto buckets = agreement_buckets({judged("E1", "R1", {{"a", 3}, {"b", 2}, {"c", 5}}),
                                            judged("E2", "R1", {{"a", 3}, {"b", 5}, {"c", 2}})},
                                           "E1", "E2");
    EXPECT_EQ(buckets.counts, (std::array<std::size_t, 5>{1, 0, 0, 2, 0}));
    EXPECT_THROW(agreement_buckets({judged("E1", "R1", {{"a", 10}}), judged("E2", "R1", {{"b", 10}})}, "E1", "E2"),
                 Error);
    EXPECT_THROW(agreement_buckets({judged("E1", "R1", {{"a", 10}})}, "E1", "E2"), Error);
}

TEST(Judgments, CsvRoundTripAndErrors) {
    const std::vector<Judgment> judgments = {{"E1", "R1", "P1/bro@2:A10", 6}, {"E1", "R1", "P2/väg:B,1", 4}};
    std::istringstream in(export_judgments(judgments));
    const auto back = import_judgments(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].association, "P2/väg:B,1");
    EXPECT_EQ(back[1].points, 4);
    std::istringstream bad("format_version,expert,requirement_id,association,points\n1,E1,R1,x,four\n");
    EXPECT_THROW(import_judgments(bad), Error);
    EXPECT_THROW(group_judgments({{"E1", "R1", "x", 5}, {"E1", "R1", "x", 5}}), Error);
    EXPECT_THROW(group_judgments({{"E1", "R1", "x", -1}}), Error);
}

TEST(Instances, EncodeDecode) {
    const AssociationInstance instance{"P/1", {"bro", 3, "A10"}};
    const auto encoded = encode_instance(instance);
    EXPECT_EQ(encoded, "P\\/1/bro@3:A10");
    EXPECT_EQ(decode_instance(encoded), instance);
    EXPECT_THROW(decode_instance("no-slash"), Error);
}

TEST(Consistency, TableVOneHot) {
    const auto vectors = encode_vectors("R", kTableV, Encoding::OneHot);
    ASSERT_EQ(vectors.size(), 4u);
    // Position 8 has labels {2, 5}, position 10 has {1, 3}: 8 + 2 + 2 components.
    EXPECT_EQ(vectors[0].components.size(), 12u);
    const double expected[4][4] = {{1, 0.8, 0.8, 0.9}, {0.8, 1, 1.0, 0.9}, {0.8, 1.0, 1, 0.9}, {0.9, 0.9, 0.9, 1}};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            EXPECT_NEAR(cosine(vectors[i].components, vectors[j].components), expected[i][j], 1e-12);
        }
    }
    EXPECT_NEAR(consistency(vectors), 5.3 / 6.0, 1e-9);
}

TEST(Consistency, OneHotActiveLabels) {
    const auto vectors = encode_vectors("R", {kTableV[0], kTableV[1]}, Encoding::OneHot);
    // Exactly one indicator is active per term position.
    double active = 0;
    for (double c : vectors[0].components) active += c;
    EXPECT_EQ(active, 10.0);
}

TEST(Consistency, NumericCodesAreVerbatim) {
    const auto vectors = encode_vectors("R", kTableV, Encoding::NumericCode);
    EXPECT_EQ(vectors[1].components, (std::vector<double>{1, 1, 1, 1, 1, 1, 1, 5, 1, 1}));
}

TEST(Consistency, EdgeCases) {
    const std::vector<CodedAnnotation> same = {{"A", {1, 2, 3}}, {"B", {1, 2, 3}}};
    EXPECT_NEAR(consistency(encode_vectors("R", same, Encoding::OneHot)), 1.0, 1e-12);
    const std::vector<CodedAnnotation> apart = {{"A", {1, 2, 3}}, {"B", {2, 3, 1}}};
    EXPECT_NEAR(consistency(encode_vectors("R", apart, Encoding::OneHot)), 0.0, 1e-12);
    EXPECT_THROW(consistency(encode_vectors("R", {same[0]}, Encoding::OneHot)), Error);
    EXPECT_THROW(encode_vectors("R", {{"A", {1, 2}}, {"B", {1}}}, Encoding::OneHot), Error);
    auto mixed = encode_vectors("R", same, Encoding::OneHot);
    mixed[1].encoding = Encoding::NumericCode;
    EXPECT_THROW(consistency(mixed), Error);
}

TEST(Consistency, CosineSymmetryAndSelfSimilarity) {
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(1 + rng() % 8);
        std::vector<double> b(a.size());
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        EXPECT_NEAR(cosine(a, a), 1.0, 1e-9);
        EXPECT_DOUBLE_EQ(cosine(a, b), cosine(b, a));
    }
}

TEST(Consistency, LabelPermutationInvariance) {
    std::mt19937 rng(57);
    const double base = consistency(encode_vectors("R", kTableV, Encoding::OneHot));
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> bijection(10);
        std::iota(bijection.begin(), bijection.end(), 1);
        std::shuffle(bijection.begin(), bijection.end(), rng);
        auto relabeled = kTableV;
        for (auto& a : relabeled) {
            for (auto& label : a.labels) label = bijection[static_cast<std::size_t>(label - 1)];
        }
        EXPECT_NEAR(consistency(encode_vectors("R", relabeled, Encoding::OneHot)), base, 1e-9);
    }
}

TEST(CodeAnnotations, SharedLabelsAndExtraPositions) {
    const std::vector<AnnotationRecord> records = {
        record("P1", Treatment::Ccr, "R1", 1, 0, 0, {{"bro", 1, "A10"}, {"väg", 3, "B20"}}),
        record("P2", Treatment::Ccr, "R1", 1, 0, 0, {{"bro", 1, "A10"}, {"bro", 1, "C30"}}),
        record("P3", Treatment::Ccr, "R1", 1, 0, 0, {{"räcke", std::nullopt, "C30"}}),
    };
    const auto coded = code_annotations(records, 4);
    ASSERT_EQ(coded.size(), 3u);
    // Labels: 1 none, then sorted code sets "A10" = 2, "A10+C30" = 3, "B20" = 4, "C30" = 5.
    EXPECT_EQ(coded[0].labels, (std::vector<int>{1, 2, 1, 4, 1}));
    EXPECT_EQ(coded[1].labels, (std::vector<int>{1, 3, 1, 1, 1}));
    EXPECT_EQ(coded[2].labels, (std::vector<int>{1, 1, 1, 1, 5}));
}

TEST(ConfidenceDistribution, Shares) {
    const std::vector<int> values = {-2, -1, 0, 1, 2};
    const auto s = confidence_distribution(values);
    EXPECT_DOUBLE_EQ(s.low, 0.4);
    EXPECT_DOUBLE_EQ(s.neutral, 0.2);
    EXPECT_DOUBLE_EQ(s.high, 0.4);
    EXPECT_NEAR(s.low + s.neutral + s.high, 1.0, 1e-9);
    const std::vector<int> zeros = {0, 0, 0};
    EXPECT_DOUBLE_EQ(confidence_distribution(zeros).neutral, 1.0);
    EXPECT_THROW(confidence_distribution(std::vector<int>{}), Error);
    EXPECT_THROW(confidence_distribution(std::vector<int>{3}), Error);
    const std::vector<AnnotationRecord> records = {record("P", Treatment::Ccr, "R", 1, -2, 1)};
    EXPECT_DOUBLE_EQ(confidence_distribution(records, ConfidenceKind::Correct).low, 1.0);
    EXPECT_DOUBLE_EQ(confidence_distribution(records, ConfidenceKind::Complete).high, 1.0);
}

TEST(MannWhitney, HandExamples) {
    const std::vector<double> a = {1, 2};
    const std::vector<double> b = {3, 4};
    const auto r = mann_whitney_u(a, b, {UMethod::Exact});
    EXPECT_EQ(r.u, 0.0);
    EXPECT_EQ(r.u_b, 4.0);
    EXPECT_DOUBLE_EQ(r.p, 1.0 / 3.0);
    EXPECT_EQ(r.method, UMethod::Exact);

    const std::vector<double> fives = {5, 5};
    const auto ties = mann_whitney_u(fives, fives);
    EXPECT_EQ(ties.u, 2.0);
    EXPECT_DOUBLE_EQ(ties.p, 1.0);
    EXPECT_THROW(mann_whitney_u(std::vector<double>{}, b), Error);
}

// Reference values from an independent implementation of the tie-corrected,
// continuity-corrected normal approximation.
TEST(MannWhitney, NormalApproximationReference) {
    struct Case {
        std::vector<double> a, b;
        double u, p;
    };
    const std::vector<Case> cases = {
        {{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10, 11}, 0.0, 0.00811311726556578},
        {{1, 1, 2, 2, 3}, {2, 3, 3, 4, 4, 4}, 3.0, 0.030423784148462706},
        {{5, 5, 5}, {5, 5, 5, 5}, 6.0, 1.0},
        {{3, 1, 4, 1, 5, 9, 2, 6}, {5, 3, 5, 8, 9, 7, 9, 3, 2}, 22.5, 0.20702196820234253},
    };
    for (const auto& c : cases) {
        const auto r = mann_whitney_u(c.a, c.b, {UMethod::Normal});
        EXPECT_EQ(r.method, UMethod::Normal);
        EXPECT_DOUBLE_EQ(r.u, c.u);
        EXPECT_NEAR(r.p, c.p, 1e-12);
    }
}

TEST(MannWhitney, AutoSwitchesOnTheCap) {
    std::vector<double> a(10);
    std::vector<double> b(10);
    std::iota(a.begin(), a.end(), 0.0);
    std::iota(b.begin(), b.end(), 5.0);
    EXPECT_EQ(mann_whitney_u(a, b).method, UMethod::Exact);  // C(20,10) = 184756
    a.push_back(100);
    EXPECT_EQ(mann_whitney_u(a, b).method, UMethod::Normal);  // C(21,11) = 352716
    EXPECT_EQ(mann_whitney_u(a, b, {UMethod::Auto, 400000}).method, UMethod::Exact);
}

TEST(MannWhitney, SevenBySevenExtremes) {
    std::vector<double> a(7);
    std::vector<double> b(7);
    std::iota(a.begin(), a.end(), 1.0);
    std::iota(b.begin(), b.end(), 8.0);
    const auto exact = mann_whitney_u(a, b, {UMethod::Exact});
    EXPECT_EQ(exact.u, 0.0);
    EXPECT_DOUBLE_EQ(exact.p, 2.0 / 3432.0);
    const auto normal = mann_whitney_u(a, b, {UMethod::Normal});
    EXPECT_NEAR(normal.p, 0.0021650293330383757, 1e-12);
}

// Pilot-scale group sizes with U = 209; auto mode
// falls back to the normal approximation at this size.
TEST(MannWhitney, TwentyEightByTwentyOne) {
    std::vector<double> a;
    for (int i = 0; i < 13; ++i) a.push_back(7.5 + i * 0.001);
    for (int i = 0; i < 15; ++i) a.push_back(6.5 + i * 0.001);
    std::vector<double> b(21);
    std::iota(b.begin(), b.end(), 0.0);
    const auto r = mann_whitney_u(a, b);
    EXPECT_EQ(r.method, UMethod::Normal);
    EXPECT_EQ(r.u, 209.0);
    EXPECT_NEAR(r.p, 0.08779272624198274, 1e-12);
}

TEST(MannWhitney, ExactMatchesEnumerationOnSmallSamples) {
    std::mt19937 rng(59);
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<double> a(1 + rng() % 6);
        std::vector<double> b(1 + rng() % 6);
        for (auto& x : a) x = static_cast<double>(1 + rng() % 3);
        for (auto& x : b) x = static_cast<double>(1 + rng() % 3);
        const auto r = mann_whitney_u(a, b, {UMethod::Exact});
        const auto expected = oracle::exact_p(a, b);
        EXPECT_EQ(r.p, expected.p());
        EXPECT_EQ(2.0 * r.u, static_cast<double>(oracle::doubled_u(a, b)));
    }
}

TEST(MannWhitney, ComplementIdentity) {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> a(1 + rng() % 30);
        std::vector<double> b(1 + rng() % 30);
        for (auto& x : a) x = static_cast<double>(rng() % 7);
        for (auto& x : b) x = static_cast<double>(rng() % 7);
        const auto r = mann_whitney_u(a, b);
        EXPECT_EQ(r.u + r.u_b, static_cast<double>(a.size() * b.size()));
        EXPECT_GE(r.u, 0.0);
        EXPECT_GE(r.p, 0.0);
        EXPECT_LE(r.p, 1.0);
        const auto swapped = mann_whitney_u(b, a);
        EXPECT_EQ(swapped.u, r.u_b);
        EXPECT_DOUBLE_EQ(swapped.p, r.p);
    }
}

TEST(Binomial, ValuesAndOverflow) {
    EXPECT_EQ(binomial(4, 2), 6u);
    EXPECT_EQ(binomial(49, 21), 39049918716424ULL);
    EXPECT_EQ(binomial(5, 7), 0u);
    EXPECT_EQ(binomial(200, 100), std::numeric_limits<std::uint64_t>::max());
    EXPECT_EQ(binomial(67, 33), 14226520737620288370ULL);
}

TEST(Encoding, Names) {
    EXPECT_EQ(parse_encoding("one-hot"), Encoding::OneHot);
    EXPECT_EQ(parse_encoding(to_string(Encoding::NumericCode)), Encoding::NumericCode);
    EXPECT_THROW(parse_encoding("hot"), Error);
    EXPECT_EQ(parse_umethod("normal"), UMethod::Normal);
    EXPECT_THROW(parse_umethod("approx"), Error);
}
