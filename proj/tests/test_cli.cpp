#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace peerpred;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("peerpred_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        const auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }

    fs::path write_model(const std::string& name, const JointSignalModel& m) {
        return write(name, io::model_to_json(m).dump());
    }

    CliRun run(const std::string& args) {
        const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = std::string(PEERPRED_CLI_PATH) + " " + args + " > " + out.string() + " 2> " + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, AnalyzeExampleModel) {
    const auto model = write_model("example.json", fixtures::example_model());
    const auto r = run("analyze --model " + model.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    const auto ref = oracle::classes(oracle::sign(oracle::delta(fixtures::grid(fixtures::example_model().joint()))));
    EXPECT_EQ(doc["classification"]["categorical"].get<bool>(), ref.categorical);
    EXPECT_TRUE(doc["classification"]["categorical"].get<bool>());
    const auto c = io::classification_from_json(doc["classification"]);
    EXPECT_EQ(io::classification_to_json(c), doc["classification"]);
    EXPECT_EQ(io::model_from_json(doc["model"]).joint(), fixtures::example_model().joint());
}

TEST_F(CliTest, MalformedJsonNamesField) {
    const auto bad = write("bad.json", R"({"n": 2, "joint": [[0.4, 0.6], "row"]})");
    const auto r = run("analyze --model " + bad.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("'joint'"), std::string::npos) << r.err;
    const auto broken = write("broken.json", "{\"n\": 2,");
    EXPECT_EQ(run("analyze --model " + broken.string()).code, 2);
    EXPECT_EQ(run("analyze --model " + (dir_ / "missing.json").string()).code, 2);
}

TEST_F(CliTest, TextFormatCarriesSameContent) {
    const auto model = write_model("example.json", fixtures::example_model());
    const auto text = run("analyze --format text --model " + model.string());
    ASSERT_EQ(text.code, 0);
    const auto doc = json::parse(run("analyze --model " + model.string()).out);
    for (const auto& [key, value] : doc["classification"].items()) {
        EXPECT_NE(text.out.find(key), std::string::npos) << key;
        if (value.is_boolean()) {
            EXPECT_NE(text.out.find(value.dump()), std::string::npos);
        }
    }
    EXPECT_NE(text.out.find("0.0975"), std::string::npos);
}

TEST_F(CliTest, VerifyPassthrough) {
    const auto example = write_model("example.json", fixtures::example_model());
    auto r = run("verify --mechanism msdg --model " + example.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = json::parse(r.out);
    EXPECT_TRUE(doc["verdict"]["strongly_truthful"].get<bool>());
    EXPECT_EQ(io::verdict_to_json(io::verdict_from_json(doc["verdict"])), doc["verdict"]);

    const auto ordinal = write_model("ordinal.json", fixtures::ordinal_world(5));
    doc = json::parse(run("verify --mechanism msdg --model " + ordinal.string()).out);
    EXPECT_FALSE(doc["verdict"]["strongly_truthful"].get<bool>());
    EXPECT_FALSE(doc["verdict"]["witness_violation"].is_null());
    doc = json::parse(run("verify --mechanism ca --model " + ordinal.string()).out);
    EXPECT_TRUE(doc["verdict"]["informed_truthful"].get<bool>());

    const auto clustered = write_model("clustered.json", fixtures::clustered_world());
    doc = json::parse(run("verify --mechanism ca --model " + clustered.string()).out);
    EXPECT_TRUE(doc["verdict"]["informed_truthful"].get<bool>());
    EXPECT_FALSE(doc["verdict"]["strongly_truthful"].get<bool>());
    const auto& w = doc["verdict"]["strong_witnesses"]["unilateral"];
    EXPECT_NEAR(w["score"].get<double>(), doc["verdict"]["truthful_score"].get<double>(), 1e-9);
}

TEST_F(CliTest, CustomMechanism) {
    const auto example = write_model("example.json", fixtures::example_model());
    const auto s = write("s.json", R"({"s": [[1, -1], [-1, 1]]})");
    const auto r = run("verify --mechanism custom:" + s.string() + " --model " + example.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["verdict"]["truthful_score"].get<double>(), 0.39, 1e-12);
    const auto wrong = write("s3.json", R"({"s": [[1,0,0],[0,1,0],[0,0,1]]})");
    EXPECT_EQ(run("verify --mechanism custom:" + wrong.string() + " --model " + example.string()).code, 2);
    EXPECT_EQ(run("verify --mechanism nope --model " + example.string()).code, 2);
}

TEST_F(CliTest, CapExceededExitCode) {
    const auto big = write_model("big.json", JointSignalModel::create(Matrix::Constant(7, 7, 1.0 / 49.0)));
    const auto r = run("verify --mechanism msdg --model " + big.string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("cap 6"), std::string::npos) << r.err;
    EXPECT_EQ(run("feasibility --model " + big.string()).code, 3);
}

TEST_F(CliTest, FeasibilityOutput) {
    const auto fam = write_model("fam.json", fixtures::impossibility_world(0.2, 0.1));
    auto doc = json::parse(run("feasibility --model " + fam.string()).out);
    EXPECT_FALSE(doc["feasibility"]["feasible"].get<bool>());
    const auto example = write_model("example.json", fixtures::example_model());
    doc = json::parse(run("feasibility --model " + example.string()).out);
    EXPECT_TRUE(doc["feasibility"]["certified"].get<bool>());
    EXPECT_EQ(io::feasibility_to_json(io::feasibility_from_json(doc["feasibility"])), doc["feasibility"]);
}

TEST_F(CliTest, SeedRequired) {
    const auto example = write_model("example.json", fixtures::example_model());
    for (const std::string args : {"simulate --m 9", "converge --m 50 --trials 5", "learn --m 20"}) {
        const auto r = run(args + " --model " + example.string());
        EXPECT_EQ(r.code, 2) << args;
        EXPECT_NE(r.err.find("--seed"), std::string::npos) << args;
    }
    EXPECT_EQ(run("converge --trials 5 --seed 1 --model " + example.string()).code, 2);  // --m missing
}

TEST_F(CliTest, ConvergePassthrough) {
    const auto example = write_model("example.json", fixtures::example_model());
    auto r = run("converge --m 50,1000 --trials 60 --epsilon 0.05 --delta 0.05 --seed 5 --model " + example.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = json::parse(r.out);
    ASSERT_EQ(doc["reports"].size(), 2u);
    EXPECT_TRUE(doc["reports"][1]["pass"].get<bool>());
    EXPECT_EQ(io::convergence_to_json(io::convergence_from_json(doc)), doc);

    r = run("converge --m 4,8 --trials 30 --epsilon 1 --seed 5 --model " + example.string());
    doc = json::parse(r.out);
    for (const auto& rep : doc["reports"]) EXPECT_TRUE(rep["pass"].get<bool>());

    EXPECT_EQ(run("converge --m 50 --trials 0 --seed 5 --model " + example.string()).code, 2);

    r = run("converge --m 50 --trials 7 --seed 5 --format csv --model " + example.string());
    std::istringstream csv(r.out);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "m,trial,sign_correct,gap");
}

TEST_F(CliTest, ByteIdenticalOutputs) {
    const auto example = write_model("example.json", fixtures::example_model());
    const std::vector<std::string> commands{
        "simulate --m 60 --seed 9 --format csv", "simulate --m 60 --seed 9 --mechanism msdg",
        "converge --m 50,200 --trials 20 --seed 9 --threads 3", "learn --m 100 --seed 9",
        "simulate --m 60 --trials 30 --seed 9 --mechanism msdg --threads 2"};
    for (const auto& cmd : commands) {
        const auto a = dir_ / "a.out", b = dir_ / "b.out";
        ASSERT_EQ(run(cmd + " --model " + example.string() + " --out " + a.string()).code, 0) << cmd;
        ASSERT_EQ(run(cmd + " --model " + example.string() + " --out " + b.string()).code, 0) << cmd;
        EXPECT_EQ(slurp(a), slurp(b)) << cmd;
        EXPECT_FALSE(slurp(a).empty());
    }
    const auto t1 = run("converge --m 50 --trials 20 --seed 9 --threads 1 --model " + example.string());
    const auto t3 = run("converge --m 50 --trials 20 --seed 9 --threads 3 --model " + example.string());
    EXPECT_EQ(t1.out, t3.out);
}

TEST_F(CliTest, ScoreReportsFile) {
    const auto example = write_model("example.json", fixtures::example_model());
    const auto reports = write("r.csv", "task_id,agent,report\na,1,1\na,2,1\nb,1,2\nb,2,2\nc,1,1\nd,2,2\n");
    auto r = run("score --mechanism msdg --seed 1 --reports " + reports.string() + " --model " + example.string());
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = json::parse(r.out);
    // Penalty pair is always (1, 2): no agreement, so each bonus task nets 1.
    EXPECT_EQ(doc["payments"]["total"].get<double>(), 2.0);

    r = run("score --mechanism msdg --seed 1 --bonus a --penalty1 b,c --penalty2 d --reports " + reports.string() +
            " --model " + example.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["payments"]["per_bonus_task"].size(), 1u);

    r = run("score --mechanism msdg --f 2,1 --g 2,1 --model " + example.string());
    EXPECT_NEAR(json::parse(r.out)["expected_score"].get<double>(), 0.195, 1e-12);

    const auto bad = write("bad.csv", "task_id,agent,report\na,1,3\n");
    EXPECT_EQ(run("score --seed 1 --reports " + bad.string() + " --model " + example.string()).code, 2);
}

TEST_F(CliTest, SimulateThenLearnRoundTrip) {
    const auto example = write_model("example.json", fixtures::example_model());
    const auto csv = dir_ / "sim.csv";
    ASSERT_EQ(run("simulate --m 600 --seed 2 --format csv --out " + csv.string() + " --model " + example.string()).code, 0);
    const auto r = run("learn --seed 3 --n 2 --reports " + csv.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["ca_df"]["score_a"].size(), 2u);
}

TEST_F(CliTest, Ingest) {
    const auto data = write("a.csv",
                            "question_id,submission_id,grader_id,report\n"
                            "q1,s1,g1,1\nq1,s1,g2,2\nq1,s2,g1,2\nq1,s2,g3,2\nq1,s3,g1,0\n"
                            "q2,s1,g1,1\n");
    const auto r = run("ingest --data " + data.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["errors"].size(), 1u);
    ASSERT_EQ(doc["questions"].size(), 2u);
    EXPECT_EQ(doc["questions"][0]["pairs"], 2);
    EXPECT_TRUE(doc["questions"][1].contains("error"));
    EXPECT_EQ(run("ingest --data " + (dir_ / "none.csv").string()).code, 2);
}
