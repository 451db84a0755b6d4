#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with stderr discarded and returns exit code plus stdout.
Result run(const std::string& args) {
    const std::string cmd = std::string("\"") + BIASATTR_CLI + "\" " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string pipeline_args() {
    const auto dir = testing::data_dir() / "pipeline";
    return "--corpus " + q(dir / "corpus.csv") + " --provider " + q("fixture:" + (dir / "fixture.json").string());
}

std::string lexicon_args() {
    const auto dir = testing::data_dir() / "lexicon";
    return " --lexicon " + q(dir / "lexicon.tsv") + " --labels " + q(dir / "labels.tsv");
}

}  // namespace

TEST_CASE("eval, report and semtag round trip") {
    testing::TempDir tmp;
    auto r = run("eval " + pipeline_args() + " --out " + q(tmp / "run") + " -j 3 --quiet");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("3/3 pairs scored") != std::string::npos);
    CHECK(testing::slurp(tmp / "run" / "pairs.jsonl") ==
          testing::slurp(testing::data_dir() / "pipeline" / "expected_pairs.jsonl"));

    r = run("report --results " + q(tmp / "run"));
    CHECK(r.code == 0);
    CHECK(r.out.find("| Model | gender | sexual orientation | all |") != std::string::npos);
    CHECK(r.out.find("| fixture-pipeline | 50.00 | 0.00 | 33.33 |") != std::string::npos);

    r = run("semtag --results " + q(tmp / "run") + lexicon_args() + " --min-count 3");
    CHECK(r.code == 0);
    CHECK(r.out.find("Grammatical bin") != std::string::npos);
    CHECK(fs::exists(tmp / "run" / "semantic_fields.csv"));
    CHECK(testing::slurp(tmp / "run" / "attributions" / "12.md").find("Crime, law and order") != std::string::npos);
}

TEST_CASE("inspect prints the alignment") {
    auto r = run("inspect " + pipeline_args() + " --pair 7");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j.dump().find("emotional") != std::string::npos);
    CHECK(run("inspect " + pipeline_args() + " --pair 999").code == 2);
}

TEST_CASE("exit codes") {
    testing::TempDir tmp;
    const auto dir = testing::data_dir() / "pipeline";
    CHECK(run("").code == 2);
    CHECK(run("eval --corpus x").code == 2);
    CHECK(run("eval " + pipeline_args() + " --out " + q(tmp / "a") + " -j 0").code == 2);
    CHECK(run("eval " + pipeline_args() + " --out " + q(tmp / "a") + " --dimensions colour").code == 2);
    CHECK(run("eval --corpus " + q(tmp / "none.csv") + " --provider " + q("fixture:" + (dir / "fixture.json").string()) +
              " --out " + q(tmp / "b"))
              .code == 4);
    CHECK(run("eval --corpus " + q(dir / "corpus.csv") + " --provider http://127.0.0.1:9 --out " + q(tmp / "c")).code ==
          3);
    testing::spit(tmp / "bad.tsv", "broken row\n");
    CHECK(run("eval " + pipeline_args() + " --out " + q(tmp / "d") + " --lexicon " + q(tmp / "bad.tsv") + " --labels " +
              q(tmp / "bad.tsv"))
              .code == 2);
    CHECK_FALSE(fs::exists(tmp / "d"));
}
