#include "commands.hpp"
#include "iqcloc/error.hpp"
#include "iqcloc/synthesis.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <string>

using namespace iqcloc;
using namespace iqcloc::cli;
using iqcloc::testing::kind_of;

namespace {

const std::string kFixtures = IQCLOC_FIXTURES;

Outcome run_file(const std::string& command, const std::string& fixture, const Flags& flags = {}) {
    return run(command, Source::read_file(kFixtures + "/" + fixture), flags);
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const char* kScalar = R"({
  "subsystems": [
    {"name": "H", "n": 1, "n_v": 1, "n_y": 1,
     "A": [[-2.0]], "B1": [[1.0]], "C1": [[1.0]], "D11": [[0.0]]}
  ]
})";

}  // namespace

TEST_CASE("cli: admissible on the identity-routing fixture has zero distance") {
    const Outcome out = run_file("admissible", "chain2.json");
    CHECK(out.exit == Exit::Success);
    CHECK(out.report["status"] == "admissible");
    CHECK(out.report["results"]["distance"].get<double>() <= 1e-6);
}

TEST_CASE("cli: synthesize on the gain-0.5 fixture matches the frequency oracle") {
    Flags f;
    f.gamma_hi = 10.0;
    const Outcome out = run_file("synthesize", "scalar.json", f);
    CHECK(out.exit == Exit::Success);
    const Problem pr = parse_problem(Source::read_file(kFixtures + "/scalar.json"));
    const double oracle = freq_gain_oracle(open_loop_channel(pr.subsystems[0].plant));
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-6));
    const double g = out.report["results"]["subsystems"][0]["gamma_star"].get<double>();
    CHECK(std::abs(g - oracle) <= 1e-3);
}

TEST_CASE("cli: ragged matrix row is a parse error with its location") {
    const std::string text = R"({
  "subsystems": [
    {"name": "H", "n": 2, "n_v": 1, "n_y": 1,
     "A": [[-1.0, 0.0],
           [0.0]],
     "B1": [[1.0], [1.0]], "C1": [[1.0, 0.0]]}
  ]
})";
    const Source src = Source::parse(text, "bad.json");
    CHECK(kind_of([&] { parse_problem(src); }) == ErrorKind::ParseError);
    const std::string msg = message_of([&] { parse_problem(src); });
    CHECK(msg.find("bad.json:5:12") != std::string::npos);
    CHECK(msg.find("row 1 has 1 entries, expected 2") != std::string::npos);
}

TEST_CASE("cli: malformed JSON reports line and column") {
    const std::string msg = message_of([] { Source::parse("{\n  \"subsystems\": [\n    1,,\n]}", "x.json"); });
    CHECK(msg.find("ParseError") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
}

TEST_CASE("cli: unknown keys are rejected with their location") {
    std::string text = kScalar;
    text.replace(text.find("\"n\": 1"), 6, "\"n\": 1, \"bogus\": 3");
    const Source src = Source::parse(text, "k.json");
    const std::string msg = message_of([&] { parse_problem(src); });
    CHECK(msg.find("ParseError") != std::string::npos);
    CHECK(msg.find("unknown key 'bogus'") != std::string::npos);
    CHECK(msg.find("k.json:3:") != std::string::npos);

    const Source top = Source::parse(R"({"subsystems": [], "extra": 1})", "t.json");
    CHECK(message_of([&] { parse_problem(top); }).find("unknown key 'extra'") != std::string::npos);
}

TEST_CASE("cli: wrong matrix shape names the matrix") {
    std::string text = kScalar;
    text.replace(text.find("\"B1\": [[1.0]]"), 13, "\"B1\": [[1.0, 2.0]]");
    const Source src = Source::parse(text, "s.json");
    CHECK(kind_of([&] { parse_problem(src); }) == ErrorKind::DimensionMismatch);
    const std::string msg = message_of([&] { parse_problem(src); });
    CHECK(msg.find("'H' B1 is 1x2, expected 1x1") != std::string::npos);
    CHECK(msg.find("s.json:4:") != std::string::npos);
}

TEST_CASE("cli: localize report replays through validate") {
    for (const char* fixture : {"chain2.json", "series2.json", "triple.json"}) {
        CAPTURE(fixture);
        const Outcome loc = run_file("localize", fixture);
        REQUIRE(loc.exit == Exit::Success);
        CHECK(loc.report["results"]["distance"].is_number());
        const Source rep = Source::parse(loc.report.dump(), "report.json");
        const Outcome val = run("validate", rep, {});
        CHECK(val.exit == Exit::Success);
        CHECK(val.report["status"] == "valid");
        CHECK(val.report["results"]["replayed"].size() == loc.report["certificates"].size());
    }
    // On the identity routing the local levels equal the global one.
    const Outcome chain = run_file("localize", "chain2.json");
    CHECK(chain.report["results"]["gap"].get<double>() <= 1e-6);
}

TEST_CASE("cli: tampered certificates fail validation") {
    const Outcome loc = run_file("localize", "chain2.json");
    json bad = loc.report;
    for (auto& c : bad["certificates"])
        if (c["kind"] == "storage") c["P"][0][0] = -1.0;
    const Outcome val = run("validate", Source::parse(bad.dump(), "bad.json"), {});
    CHECK(val.exit == Exit::Negative);
    CHECK(val.report["status"] == "invalid");
}

TEST_CASE("cli: output is deterministic for a fixed seed") {
    Flags f;
    f.seed = 42;
    CHECK(run_file("localize", "triple.json", f).report.dump() == run_file("localize", "triple.json", f).report.dump());
    const Source rep = Source::parse(run_file("admm", "series2.json").report.dump(), "r.json");
    CHECK(run("validate", rep, f).report.dump() == run("validate", rep, f).report.dump());
}

TEST_CASE("cli: admm on the series chain certifies the composed gain") {
    const Outcome out = run_file("admm", "series2.json");
    CHECK(out.exit == Exit::Success);
    CHECK(out.report["status"] == "converged");
    CHECK(out.report["results"]["gamma"].get<double>() <= 0.275);
    CHECK(out.report["traces"]["primal"].size() == out.report["results"]["iterations"].get<std::size_t>());
    const Outcome val = run("validate", Source::parse(out.report.dump(), "r.json"), {});
    CHECK(val.report["status"] == "valid");
}

TEST_CASE("cli: group finds the coupled pair and its certificates replay") {
    const Outcome out = run_file("group", "triple.json");
    CHECK(out.exit == Exit::Success);
    const json& groups = out.report["results"]["groups"];
    REQUIRE(groups.size() == 2);
    CHECK((groups[0] == json{"H2", "H3"} || groups[1] == json{"H2", "H3"}));
    const Outcome val = run("validate", Source::parse(out.report.dump(), "r.json"), {});
    CHECK(val.report["status"] == "valid");
}

TEST_CASE("cli: infeasible answers exit with code 2") {
    Flags f;
    f.gamma_hi = 0.1;
    const Outcome out = run_file("analyze", "scalar.json", f);
    CHECK(out.exit == Exit::Negative);
    CHECK(out.report["status"] == "infeasible");

    // Passivity preset on a passive first-order lag needs no bisection.
    std::string text = kScalar;
    text.replace(text.find("\"D11\": [[0.0]]"), 14, "\"D11\": [[0.0]], \"objective\": \"passivity\"");
    const Outcome pass = run("analyze", Source::parse(text, "p.json"), {});
    CHECK(pass.exit == Exit::Success);
    CHECK(pass.report["results"]["subsystems"][0]["gamma"].get<double>() == 0.0);
}

TEST_CASE("cli: commands that need an interconnection reject problems without one") {
    CHECK(kind_of([] { run_file("localize", "scalar.json"); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { run_file("frobnicate", "scalar.json"); }) == ErrorKind::InvalidArgument);
    Flags f;
    f.mode = "diagonal";
    CHECK(kind_of([&] { run_file("localize", "chain2.json", f); }) == ErrorKind::InvalidArgument);
}
