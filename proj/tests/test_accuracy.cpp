#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "itemval/accuracy.hpp"

using namespace itemval;

TEST_CASE("hand-checked accuracy bookkeeping") {
    const Questionnaire q = testutil::tiny_questionnaire();
    // a1 correct, a2 misassigned to b, b1 correct, b2 tied
    const std::vector<AssignmentOutcome> outcomes = {
        {"a1", "a", "a", false},
        {"a2", "a", "b", false},
        {"b1", "b", "b", false},
        {"b2", "b", std::nullopt, true},
    };
    const AccuracyReport r = compute_accuracy(outcomes, q);
    CHECK(r.per_construct == std::vector<double>{0.5, 0.5});
    CHECK(r.macro == 0.5);
    CHECK(r.micro == 0.5);
    CHECK(r.confusion == std::vector<std::vector<int>>{{1, 1}, {0, 1}});
    CHECK(r.ties_by_declared == std::vector<int>{0, 1});
    CHECK(r.declared_counts == std::vector<int>{2, 2});
    CHECK(r.correct_counts == std::vector<int>{1, 1});

    // row sums plus ties account for every declared item
    for (std::size_t c = 0; c < 2; ++c) {
        int row_sum = 0;
        for (int v : r.confusion[c]) row_sum += v;
        CHECK(row_sum + r.ties_by_declared[c] == r.declared_counts[c]);
    }
}

TEST_CASE("macro and micro agree on balanced designs and differ otherwise") {
    Questionnaire q;
    q.name = "unbalanced";
    q.constructs = {{"a", ""}, {"b", ""}};
    q.items = {{"a1", "t", "a", ""}, {"a2", "t", "a", ""}, {"b1", "t", "b", ""}};
    q.validate();
    const std::vector<AssignmentOutcome> outcomes = {
        {"a1", "a", "a", false},
        {"a2", "a", "b", false},
        {"b1", "b", "b", false},
    };
    const AccuracyReport r = compute_accuracy(outcomes, q);
    CHECK(r.macro == 0.75);                      // mean(0.5, 1.0)
    CHECK_THAT(*r.micro, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));

    const Questionnaire balanced = testutil::tiny_questionnaire();
    const std::vector<AssignmentOutcome> even = {
        {"a1", "a", "a", false},
        {"a2", "a", "a", false},
        {"b1", "b", "a", false},
        {"b2", "b", "b", false},
    };
    const AccuracyReport rb = compute_accuracy(even, balanced);
    CHECK(rb.macro == *rb.micro);
}

TEST_CASE("accuracy report JSON round-trips") {
    const Questionnaire q = testutil::tiny_questionnaire();
    const std::vector<AssignmentOutcome> outcomes = {
        {"a1", "a", "a", false},
        {"a2", "a", "b", false},
        {"b1", "b", "b", false},
        {"b2", "b", std::nullopt, true},
    };
    const AccuracyReport r = compute_accuracy(outcomes, q);
    const AccuracyReport back = AccuracyReport::from_json(
        nlohmann::json::parse(r.to_json().dump()), "roundtrip");
    CHECK(back.construct_ids == r.construct_ids);
    CHECK(back.per_construct == r.per_construct);
    CHECK(back.macro == r.macro);
    CHECK(back.micro == r.micro);
    CHECK(back.confusion == r.confusion);
    CHECK(back.ties_by_declared == r.ties_by_declared);
    CHECK(back.declared_counts == r.declared_counts);
    CHECK(back.correct_counts == r.correct_counts);
}

TEST_CASE("per-construct-only JSON is accepted") {
    const auto doc = nlohmann::json::parse(R"({
        "constructs": ["a", "b"],
        "per_construct": {"a": 1.0, "b": 0.9}
    })");
    const AccuracyReport r = AccuracyReport::from_json(doc, "minimal");
    CHECK(r.per_construct == std::vector<double>{1.0, 0.9});
    CHECK_THAT(r.macro, Catch::Matchers::WithinAbs(0.95, 1e-15));
    CHECK_FALSE(r.micro.has_value());
}

TEST_CASE("accuracy_from_fractions computes the macro mean only") {
    const AccuracyReport r = accuracy_from_fractions({"agree", "consc", "extra", "neuro", "open"},
                                                     {1.0, 0.9, 0.5, 0.8, 1.0});
    CHECK_THAT(r.macro, Catch::Matchers::WithinAbs(0.84, 1e-12));
    CHECK_FALSE(r.micro.has_value());
    CHECK_THROWS_AS(accuracy_from_fractions({"a"}, {0.5, 0.5}), InputError);
}

TEST_CASE("unknown constructs in outcomes are rejected") {
    const Questionnaire q = testutil::tiny_questionnaire();
    CHECK_THROWS_AS(compute_accuracy({{"a1", "zz", "a", false}}, q), InputError);
    CHECK_THROWS_AS(compute_accuracy({{"a1", "a", "zz", false}}, q), InputError);
}
