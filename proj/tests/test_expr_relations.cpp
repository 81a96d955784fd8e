#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "errors.hpp"
#include "expr.hpp"
#include "relations.hpp"
#include "test_util.hpp"

using namespace bayesperf;

TEST_CASE("expressions parse and print canonically") {
    CHECK(expr_to_string(parse_expr("( add  A   B )")) == "(add A B)");
    CHECK(expr_to_string(parse_expr("A")) == "A");
    CHECK(expr_to_string(parse_expr("2.5")) == "2.5");
    CHECK(expr_to_string(parse_expr("-3")) == "-3");
    CHECK(expr_to_string(parse_expr("(mul 2 (add A B) C)")) == "(mul 2 (add A B) C)");
    CHECK(parse_expr("7").kind == Expr::Kind::kConst);
    CHECK(parse_expr("X7").kind == Expr::Kind::kVar);
}

TEST_CASE("expression parse errors") {
    CHECK_THROWS_AS(parse_expr(""), ParseError);
    CHECK_THROWS_AS(parse_expr("(add A)"), ParseError);
    CHECK_THROWS_AS(parse_expr("(sub A B C)"), ParseError);
    CHECK_THROWS_AS(parse_expr("(div A)"), ParseError);
    CHECK_THROWS_AS(parse_expr("(mod A B)"), ParseError);
    CHECK_THROWS_AS(parse_expr("(add A B"), ParseError);
    CHECK_THROWS_AS(parse_expr("A B"), ParseError);
    CHECK_THROWS_AS(parse_expr("3x"), ParseError);
}

TEST_CASE("expression evaluation") {
    const std::map<std::string, double> values{{"A", 6.0}, {"B", 2.0}, {"C", -1.0}};
    CHECK(eval_expr(parse_expr("(add A B C)"), values) == doctest::Approx(7.0));
    CHECK(eval_expr(parse_expr("(sub A B)"), values) == doctest::Approx(4.0));
    CHECK(eval_expr(parse_expr("(mul A B C)"), values) == doctest::Approx(-12.0));
    CHECK(eval_expr(parse_expr("(div A B)"), values) == doctest::Approx(3.0));
    CHECK(eval_expr(parse_expr("(div A (add B C))"), values) == doctest::Approx(6.0));
    CHECK_THROWS_AS(eval_expr(parse_expr("(add A D)"), values), UnknownEventError);
    CHECK_THROWS_AS(eval_expr(parse_expr("(div A (add B -2))"), values), DivisionByZeroError);
}

TEST_CASE("variable collection") {
    const auto e = parse_expr("(div (add A B) (mul C D))");
    CHECK(expr_variables(e) == std::set<std::string>{"A", "B", "C", "D"});
    CHECK(expr_denominator_variables(e) == std::set<std::string>{"C", "D"});
    CHECK(expr_denominator_variables(parse_expr("(add A B)")).empty());
}

TEST_CASE("factor slack scales with magnitude in relative mode") {
    auto f = testutil::make_factor("f", "A", "B", 0.01);
    SUBCASE("zero residual gives zero log-density") {
        CHECK(evaluate_factor(f, {{"A", 100.0}, {"B", 100.0}}) == doctest::Approx(0.0));
    }
    SUBCASE("sigma is slack times the larger magnitude") {
        CHECK(factor_sigma(f, {{"A", 100.0}, {"B", 50.0}}) == doctest::Approx(1.0));
        CHECK(factor_sigma(f, {{"A", 0.2}, {"B", -0.4}}) == doctest::Approx(0.01));
        // residual 50 at sigma 1: log-density -0.5 * 50^2
        CHECK(evaluate_factor(f, {{"A", 100.0}, {"B", 50.0}}) == doctest::Approx(-1250.0));
    }
    SUBCASE("absolute mode ignores magnitude") {
        auto g = testutil::make_factor("g", "A", "B", 0.5, true);
        CHECK(factor_sigma(g, {{"A", 1000.0}, {"B", 0.0}}) == doctest::Approx(0.5));
        // unit residual: -1 / (2 * 0.5^2)
        CHECK(evaluate_factor(g, {{"A", 1.0}, {"B", 0.0}}) == doctest::Approx(-2.0));
    }
}

TEST_CASE("factor scope unions both sides") {
    const auto f = testutil::make_factor("f", "X", "(mul 2 (add Y Z))");
    CHECK(f.scope() == std::set<std::string>{"X", "Y", "Z"});
}

TEST_CASE("relations json loading") {
    const auto j = nlohmann::json::parse(R"json({
        "factors": [
            {"id": "r1", "lhs": "L1D_ACCESS", "rhs": "(add MEM_LOADS MEM_STORES)"},
            {"id": "r2", "lhs": "A", "rhs": "B", "slack_sigma": 0.1,
             "slack_mode": "absolute", "params": {"weight": 2.0}}
        ]
    })json");
    const auto rel = relations_from_json(j);
    REQUIRE(rel.factors.size() == 2);
    CHECK(rel.factors[0].slack_sigma == doctest::Approx(0.01));
    CHECK_FALSE(rel.factors[0].slack_absolute);
    CHECK(rel.factors[1].slack_absolute);
    CHECK(rel.factors[1].params.at("weight") == doctest::Approx(2.0));

    const auto round = relations_from_json(relations_to_json(rel));
    CHECK(round.factors[1].slack_sigma == doctest::Approx(0.1));
    CHECK(expr_to_string(round.factors[0].rhs) == "(add MEM_LOADS MEM_STORES)");

    CHECK_THROWS_AS(relations_from_json(nlohmann::json::parse(R"({"factors": [{"id": "x"}]})")),
                    SchemaError);
    CHECK_THROWS_AS(relations_from_json(nlohmann::json::parse(
                        R"({"factors": [{"id": "x", "lhs": "A", "rhs": "B", "slack_sigma": 0}]})")),
                    SchemaError);
    CHECK_THROWS_AS(relations_from_json(nlohmann::json::parse(
                        R"({"factors": [{"id": "x", "lhs": "A", "rhs": "B", "slack_mode": "loose"}]})")),
                    SchemaError);
    CHECK_THROWS_AS(relations_from_json(nlohmann::json::parse(
                        R"({"factors": [{"id": "x", "lhs": "1", "rhs": "2"}]})")),
                    SchemaError);
}

TEST_CASE("factor graph structure") {
    const auto catalog = testutil::make_catalog({"e1", "e2", "e3", "e4", "e5"}, 2, {"CLK"});
    RelationSet rel;
    rel.factors.push_back(testutil::make_factor("f", "e1", "e2"));
    rel.factors.push_back(testutil::make_factor("g", "e2", "(add e3 e4)"));
    const FactorGraph graph(catalog, rel);

    SUBCASE("all catalog events are variables, isolated and fixed included") {
        CHECK(graph.variables().size() == 6);
        CHECK(graph.has_variable("e5"));
        CHECK(graph.has_variable("CLK"));
        CHECK(graph.factors_of("e5").empty());
    }
    SUBCASE("scopes and incidence") {
        CHECK(graph.factors_of("e2").size() == 2);
        CHECK(graph.scope(1) == std::set<std::string>{"e2", "e3", "e4"});
        CHECK_THROWS_AS(graph.factors_of("nope"), UnknownEventError);
    }
    SUBCASE("markov blankets") {
        CHECK(graph.markov_blanket("e1") == std::set<std::string>{"e2"});
        CHECK(graph.markov_blanket("e2") == std::set<std::string>{"e1", "e3", "e4"});
        CHECK(graph.markov_blanket(std::set<std::string>{"e1", "e3"}) ==
              std::set<std::string>{"e2", "e4"});
        CHECK(graph.markov_blanket("e5").empty());
        CHECK_THROWS_AS(graph.markov_blanket("nope"), UnknownEventError);
    }
    SUBCASE("closed neighborhood adds the targets back") {
        CHECK(graph.closed_neighborhood({"e1"}) == std::set<std::string>{"e1", "e2"});
    }
    SUBCASE("adjacency requires a shared factor") {
        CHECK(graph.adjacent("e1", "e2"));
        CHECK(graph.adjacent("e3", "e4"));
        CHECK_FALSE(graph.adjacent("e1", "e3"));
        CHECK_FALSE(graph.adjacent("e1", "e1"));
    }
}

TEST_CASE("factor graph rejects duplicate ids and unknown events") {
    const auto catalog = testutil::make_catalog({"a", "b"}, 2);
    RelationSet dup;
    dup.factors.push_back(testutil::make_factor("f", "a", "b"));
    dup.factors.push_back(testutil::make_factor("f", "b", "a"));
    CHECK_THROWS_AS(FactorGraph(catalog, dup), DuplicateFactorIdError);

    RelationSet unknown;
    unknown.factors.push_back(testutil::make_factor("f", "a", "zz"));
    CHECK_THROWS_AS(FactorGraph(catalog, unknown), UnknownEventError);
}

TEST_CASE("closure propagates through solvable factors") {
    RelationSet rel;
    rel.factors.push_back(testutil::make_factor("r1", "a", "(add b c)"));
    rel.factors.push_back(testutil::make_factor("r2", "d", "a"));
    rel.factors.push_back(testutil::make_factor("r3", "(mul 2 d)", "e"));

    const auto values = close_over_relations(rel, {{"b", 1.0}, {"c", 2.0}});
    CHECK(values.at("a") == doctest::Approx(3.0));
    CHECK(values.at("d") == doctest::Approx(3.0));
    // r3's unknown side is bare on the rhs, so e follows from d.
    CHECK(values.at("e") == doctest::Approx(6.0));
}

TEST_CASE("closure leaves unsolvable events unset") {
    RelationSet rel;
    rel.factors.push_back(testutil::make_factor("r1", "a", "(add b c)"));
    const auto values = close_over_relations(rel, {{"b", 1.0}});
    CHECK_FALSE(values.count("a"));

    RelationSet div;
    div.factors.push_back(testutil::make_factor("r1", "a", "(div b c)"));
    const auto v2 = close_over_relations(div, {{"b", 1.0}, {"c", 0.0}});
    CHECK_FALSE(v2.count("a"));

    // Two unknowns on one side can never be assigned from the other.
    RelationSet wide;
    wide.factors.push_back(testutil::make_factor("r1", "(add a b)", "3"));
    const auto v3 = close_over_relations(wide, {});
    CHECK(v3.empty());
}

TEST_CASE("closure runs to a fixpoint across factor order") {
    // Chain resolvable only by repeated passes: e depends on d depends on a.
    RelationSet rel;
    rel.factors.push_back(testutil::make_factor("r3", "e", "(mul 2 d)"));
    rel.factors.push_back(testutil::make_factor("r2", "d", "(add a 1)"));
    rel.factors.push_back(testutil::make_factor("r1", "a", "7"));
    const auto values = close_over_relations(rel, {});
    CHECK(values.at("a") == doctest::Approx(7.0));
    CHECK(values.at("d") == doctest::Approx(8.0));
    CHECK(values.at("e") == doctest::Approx(16.0));
}

TEST_CASE("solving one unknown") {
    SUBCASE("direct orientation") {
        const auto f = testutil::make_factor("f", "a", "(mul 2 e)");
        CHECK(solve_unknown(f, {{"e", 5.0}}, "a", 1.0).value() == doctest::Approx(10.0));
        CHECK(solve_unknown(f, {{"a", 10.0}}, "e", 1.0).value() == doctest::Approx(5.0));
    }
    SUBCASE("numeric root") {
        const auto f = testutil::make_factor("f", "(add x 1)", "3");
        const auto root = solve_unknown(f, {}, "x", 0.5);
        REQUIRE(root.has_value());
        CHECK(*root == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("nonlinear root via bracketing") {
        const auto f = testutil::make_factor("f", "(mul x x)", "9");
        const auto root = solve_unknown(f, {}, "x", 10.0);
        REQUIRE(root.has_value());
        CHECK(std::fabs(*root) == doctest::Approx(3.0).epsilon(1e-6));
    }
    SUBCASE("no real root") {
        const auto f = testutil::make_factor("f", "(add (mul x x) 4)", "0");
        CHECK_FALSE(solve_unknown(f, {}, "x", 1.0).has_value());
    }
}
