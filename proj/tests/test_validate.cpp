#include "doctest.h"
#include "exai5g/errors.hpp"
#include "exai5g/validate.hpp"
#include "fixtures.hpp"

using namespace exai5g;

namespace {

Explanation parsed(const std::string& text) { return parse_explanation(text, fixtures::phi4_request(), "g"); }

}  // namespace

TEST_SUITE("validate") {
    TEST_CASE("phi4 text is structurally valid and fully faithful") {
        const auto e = parsed(fixtures::kPhi4Text);
        const auto s = check_structure(e);
        CHECK(s.valid);
        CHECK(s.reasons.empty());
        const auto f = attribution_faithfulness(e, DirectionLexicon::standard());
        CHECK(f.score == 1.0);
        CHECK(f.n_checked == 3);
        CHECK(f.flags.empty());
    }

    TEST_CASE("two bullets are rejected with the count") {
        const auto s = check_structure(parsed("- high tcp.stream\n- low ip.len\n"));
        CHECK_FALSE(s.valid);
        REQUIRE(s.reasons.size() == 1);
        CHECK(s.reasons[0] == "bullet count 2");
    }

    TEST_CASE("a bullet naming a feature outside the top five is reported") {
        auto req = fixtures::phi4_request();
        req.top5.pop_back();
        const auto e = parse_explanation("- high tcp.stream\n- low tcp.time_relative\n- a large `ip.len`\n", req);
        const auto s = check_structure(e);
        CHECK_FALSE(s.valid);
        REQUIRE(s.reasons.size() == 1);
        CHECK(s.reasons[0].find("bullet 3") != std::string::npos);
        CHECK(s.reasons[0].find("ip.len") != std::string::npos);
    }

    TEST_CASE("non-bullet content fails the structure check") {
        const auto s = check_structure(parsed("Explanation:\n" + fixtures::kPhi4Text));
        CHECK_FALSE(s.valid);
        CHECK(s.reasons == std::vector<std::string>{"1 non-bullet line(s)"});
    }

    TEST_CASE("pass, fail and no-term bullets score 0.5 over two checks") {
        const auto e = parsed(
            "- A high `frame.time_relative` of 812.4183 is a key indicator\n"
            "- The `tcp.stream` value is low\n"
            "- The `tcp.time_relative` value was observed\n");
        const auto f = attribution_faithfulness(e, DirectionLexicon::standard());
        CHECK(f.score == 0.5);
        CHECK(f.n_checked == 2);
        CHECK(f.n_passed == 1);
    }

    TEST_CASE("sign mismatch fails; zero attribution passes") {
        auto req = fixtures::phi4_request();
        req.top5[1].attribution = 0.3;
        const auto lex = DirectionLexicon::standard();
        CHECK(attribution_faithfulness(parse_explanation("- low `tcp.stream`\n", req), lex).score == 0.0);
        req.top5[1].attribution = 0.0;
        CHECK(attribution_faithfulness(parse_explanation("- low `tcp.stream`\n", req), lex).score == 1.0);
    }

    TEST_CASE("no directional language gives 1 with a flag") {
        const auto f = attribution_faithfulness(parsed("- tcp.stream was seen\n"), DirectionLexicon::standard());
        CHECK(f.score == 1.0);
        CHECK(f.n_checked == 0);
        CHECK(f.flags == std::vector<std::string>{"no-directional-language"});
    }

    TEST_CASE("direction terms: whole words, case-insensitive, earliest first") {
        const auto lex = DirectionLexicon::standard();
        bool mixed = false;
        auto hit = first_direction_term("The HIGH value, not LOW", lex, &mixed);
        REQUIRE(hit);
        CHECK(hit->direction == Direction::Positive);
        CHECK(hit->term == "high");
        CHECK(mixed);
        CHECK_FALSE(first_direction_term("highly slowed significantly", lex));
        hit = first_direction_term("it was not a concern at all", lex, &mixed);
        REQUIRE(hit);
        CHECK(hit->direction == Direction::Negative);
        CHECK_FALSE(mixed);
    }

    TEST_CASE("lexicon validation and round trip") {
        const auto lex = DirectionLexicon::standard();
        CHECK_NOTHROW(lex.validate());
        CHECK(DirectionLexicon::from_json(lex.to_json()).positive == lex.positive);
        DirectionLexicon bad{{"high", "low"}, {"low"}};
        CHECK_THROWS_AS(bad.validate(), ConfigInvalid);
        DirectionLexicon empty_term{{""}, {"low"}};
        CHECK_THROWS_AS(empty_term.validate(), ConfigInvalid);
    }

    TEST_CASE("actionability parsing") {
        for (int k = 1; k <= 5; ++k) CHECK(parse_actionability("Actionability Score: " + std::to_string(k)) == k);
        CHECK(parse_actionability("Sure. Actionability Score: 5") == 5);
        CHECK(parse_actionability("**Actionability Score:** 4\nreasons...") == 4);
        CHECK(parse_actionability("Actionability Score: [2]") == 2);
        CHECK(parse_actionability("Actionability Score: 3 then Actionability Score: 5") == 3);
        CHECK_FALSE(parse_actionability("Actionability Score: excellent"));
        CHECK_FALSE(parse_actionability("Actionability Score: 0"));
        CHECK_FALSE(parse_actionability("Actionability Score: 6"));
        CHECK_FALSE(parse_actionability("Score: 4"));
        CHECK_FALSE(parse_actionability(""));
    }

    TEST_CASE("a judge fixed at 3 averages to 3") {
        std::vector<Explanation> es{parsed(fixtures::kPhi4Text), parsed(fixtures::kPhi4Text)};
        MockJudge judge(3);
        TfEmbedder emb;
        const auto reports = evaluate_batch(es, [&](std::size_t) -> ChatProvider& { return judge; }, emb,
                                            DirectionLexicon::standard());
        const auto rows = summarize(reports);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].actionability == 3.0);
        CHECK(rows[0].n_instances == 2);
        CHECK(rows[0].struct_valid_pct == 100.0);
        CHECK(rows[0].attribution_faithfulness == 1.0);
    }

    TEST_CASE("unparseable judge replies are flagged and excluded") {
        std::vector<Explanation> es{parsed(fixtures::kPhi4Text)};
        FixedProvider judge("I would rate this highly.");
        TfEmbedder emb;
        const auto reports = evaluate_batch(es, [&](std::size_t) -> ChatProvider& { return judge; }, emb,
                                            DirectionLexicon::standard());
        CHECK_FALSE(reports[0].actionability);
        CHECK(reports[0].flags.back() == "UnparseableScore");
        const auto rows = summarize(reports);
        CHECK_FALSE(rows[0].actionability);
        CHECK(rows[0].n_unparseable == 1);
        CHECK(ValidationReport::from_json(reports[0].to_json()).to_json() == reports[0].to_json());
    }

    TEST_CASE("cosine and semantic similarity") {
        CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
        CHECK(cosine(Eigen::Vector2d(1, 1), Eigen::Vector2d(-2, -2)) == doctest::Approx(-1.0));
        CHECK(cosine(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)) == 0.0);
        CHECK_THROWS_AS(cosine(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)), ShapeMismatch);
        TfEmbedder emb;
        CHECK(semantic_similarity("tcp.stream > 5", "tcp.stream > 5", emb) == doctest::Approx(1.0));
        CHECK(semantic_similarity("alpha beta", "gamma delta", emb) == 0.0);
        // Shared tokens: "tcp.stream" and "5" out of 3 per side.
        CHECK(semantic_similarity("tcp.stream > 5 x", "tcp.stream 5 y", emb) == doctest::Approx(2.0 / 3.0));
    }

    TEST_CASE("summary csv layout") {
        const auto csv = summary_csv({});
        CHECK(csv ==
              "generator,struct_valid_pct,semantic_similarity,attribution_faithfulness,actionability,n_instances,"
              "n_unparseable\n");
    }
}
