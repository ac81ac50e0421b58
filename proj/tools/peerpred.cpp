#include "peerpred/peerpred.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace peerpred;
using nlohmann::json;

namespace {

struct Config {
    std::string model_path;
    std::string mechanism = "ca";
    std::optional<std::uint64_t> seed;
    std::string m_list;
    std::size_t trials = 0;
    double epsilon = 0.05;
    double delta = 0.05;
    std::string format = "json";
    std::string out_path;
    std::size_t threads = 1;
    std::string reports_path;
    std::string data_path;
    std::size_t n = 0;
    std::string f = "truthful";
    std::string g = "truthful";
    std::string penalty_mode = "sampled";
    std::vector<std::string> bonus, penalty1, penalty2;
};

std::vector<std::size_t> parse_m_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ValidationError("--m: '" + tok + "' is not a positive integer");
        }
    }
    if (out.empty()) throw ValidationError("--m: expected a task count or comma-separated list");
    return out;
}

std::size_t single_m(const Config& c) {
    const auto ms = parse_m_list(c.m_list);
    if (ms.size() != 1) throw ValidationError("--m: this subcommand takes a single task count");
    return ms.front();
}

std::uint64_t require_seed(const Config& c) {
    if (!c.seed) throw ValidationError("--seed is required for randomized subcommands");
    return *c.seed;
}

PenaltyMode penalty_mode(const Config& c) {
    return c.penalty_mode == "all-pairs" ? PenaltyMode::all_pairs : PenaltyMode::sampled;
}

DeterministicStrategy strategy_flag(const std::string& text, std::size_t n, const char* flag) {
    if (text == "truthful") return DeterministicStrategy::identity(n);
    auto s = io::parse_strategy(text);
    if (s.n() != n) throw ValidationError(std::string(flag) + ": expected " + std::to_string(n) + " reports");
    return s;
}

/// Fixed score matrix for the mechanisms that have one.
ScoreMatrix fixed_score(const Config& c, const DeltaMatrix& d) {
    if (c.mechanism == "msdg") return ScoreMatrix::msdg(d.n());
    if (c.mechanism == "ca") return ScoreMatrix::ca(sign_of(d));
    if (c.mechanism.rfind("custom:", 0) == 0) {
        auto s = io::read_score_file(c.mechanism.substr(7));
        if (s.n() != d.n()) throw ValidationError("custom score matrix: size does not match the model");
        return s;
    }
    if (c.mechanism == "ca-df") throw ValidationError("--mechanism ca-df learns its score matrix; use 'learn' or 'score'");
    throw ValidationError("--mechanism: unknown mechanism '" + c.mechanism + "'");
}

json mechanism_json(const Config& c, const ScoreMatrix& s) {
    return json{{"name", c.mechanism}, {"s", matrix_to_rows(s.values())}};
}

// ---- text rendering ------------------------------------------------------------------

bool is_matrix(const json& v) {
    if (!v.is_array() || v.empty()) return false;
    for (const auto& row : v) {
        if (!row.is_array()) return false;
        for (const auto& x : row)
            if (!x.is_number()) return false;
    }
    return true;
}

void render_text(const json& v, const std::string& key, int depth, std::ostream& os) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    if (v.is_object()) {
        if (!key.empty()) os << pad << key << ":\n";
        for (const auto& [k, x] : v.items()) render_text(x, k, key.empty() ? depth : depth + 1, os);
    } else if (is_matrix(v)) {
        os << pad << key << ":\n";
        for (const auto& row : v) {
            os << pad << " ";
            for (const auto& x : row) {
                std::ostringstream cell;
                cell << x.dump();
                os << ' ' << std::setw(12) << cell.str();
            }
            os << '\n';
        }
    } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
        os << pad << key << ":\n";
        for (std::size_t i = 0; i < v.size(); ++i) render_text(v[i], "[" + std::to_string(i + 1) + "]", depth + 1, os);
    } else {
        os << pad << std::left << std::setw(30) << key << std::right << ' ' << v.dump() << '\n';
    }
}

struct Output {
    json doc;
    std::string csv;  ///< set when the subcommand has a native CSV form
};

void emit(const Config& c, const Output& out) {
    std::ostringstream os;
    if (c.format == "json") {
        os << out.doc.dump(2) << '\n';
    } else if (c.format == "csv") {
        if (out.csv.empty()) throw ValidationError("--format csv is not available for this subcommand");
        os << out.csv;
    } else {
        render_text(out.doc, "", 0, os);
    }
    if (c.out_path.empty()) {
        std::cout << os.str();
        return;
    }
    std::ofstream f(c.out_path, std::ios::binary);
    if (!f) throw ValidationError("--out: cannot write '" + c.out_path + "'");
    f << os.str();
}

// ---- subcommands ---------------------------------------------------------------------

Output run_analyze(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    return {json{{"model", io::model_to_json(model, true)}, {"classification", io::classification_to_json(classify(model))}}, {}};
}

Output run_verify(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    const auto d = delta_of(model);
    const auto s = fixed_score(c, d);
    return {json{{"mechanism", mechanism_json(c, s)}, {"verdict", io::verdict_to_json(verify(d, s))}}, {}};
}

Output run_feasibility(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    return {json{{"feasibility", io::feasibility_to_json(strong_truthful_score_exists(delta_of(model)))}}, {}};
}

TaskBatch read_batch(const Config& c, std::size_t n) {
    std::ifstream in(c.reports_path);
    if (!in) throw ValidationError("--reports: cannot open '" + c.reports_path + "'");
    io::Designation des{c.bonus, c.penalty1, c.penalty2};
    return io::read_reports_csv(in, n, des);
}

json ca_df_json(const CaDfRun& run) {
    return json{{"score_a", matrix_to_rows(run.score_a.values())},
                {"score_b", matrix_to_rows(run.score_b.values())},
                {"gamma_a", matrix_to_rows(run.estimate.gamma_a)},
                {"gamma_b", matrix_to_rows(run.estimate.gamma_b)},
                {"dropped_tasks", run.estimate.dropped},
                {"payments_a", io::payment_to_json(run.payments_a)},
                {"payments_b", io::payment_to_json(run.payments_b)},
                {"total", run.total()}};
}

/// Pays a reports file, or without one computes the analytic expected score of --f/--g.
Output run_score(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    const auto d = delta_of(model);
    if (c.reports_path.empty()) {
        const auto f = strategy_flag(c.f, d.n(), "--f");
        const auto g = strategy_flag(c.g, d.n(), "--g");
        const auto s = fixed_score(c, d);
        return {json{{"mechanism", mechanism_json(c, s)},
                     {"f", io::strategy_to_json(f)},
                     {"g", io::strategy_to_json(g)},
                     {"expected_score", expected_score_det(d, s, f, g)}},
                {}};
    }
    const TaskBatch batch = read_batch(c, d.n());
    Rng rng = make_rng(require_seed(c), "cli-score");
    if (c.mechanism == "ca-df") return {json{{"mechanism", {{"name", "ca-df"}}}, {"ca_df", ca_df_json(ca_df_pay(batch, d.n(), rng, penalty_mode(c)))}}, {}};
    const auto s = fixed_score(c, d);
    return {json{{"mechanism", mechanism_json(c, s)}, {"payments", io::payment_to_json(pay_batch(batch, s, rng, penalty_mode(c)))}}, {}};
}

/// One simulated batch (CSV: the reports file), or a Monte-Carlo estimate when --trials is set.
Output run_simulate(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    const auto d = delta_of(model);
    const std::uint64_t seed = require_seed(c);
    const std::size_t m = single_m(c);
    const auto f = strategy_flag(c.f, d.n(), "--f");
    const auto g = strategy_flag(c.g, d.n(), "--g");

    if (c.trials > 0) {
        const auto s = fixed_score(c, d);
        const auto est = monte_carlo_expected_score(model, s, MixedStrategy::from(f), MixedStrategy::from(g), m, c.trials,
                                                    seed, {penalty_mode(c), c.threads});
        return {json{{"mechanism", mechanism_json(c, s)},
                     {"f", io::strategy_to_json(f)},
                     {"g", io::strategy_to_json(g)},
                     {"m", m},
                     {"trials", c.trials},
                     {"monte_carlo_mean", est.mean},
                     {"std_error", est.std_error},
                     {"expected_score", expected_score_det(d, s, f, g)}},
                {}};
    }

    Rng rng = make_rng(seed, "cli-simulate");
    const auto plan = default_plan(m, rng);
    const auto batch = simulate(model, MixedStrategy::from(f), MixedStrategy::from(g), plan, rng);
    std::ostringstream csv;
    io::write_reports_csv(batch, csv);
    json doc{{"m", m}, {"bonus_tasks", batch.bonus.size()}, {"penalty1_tasks", batch.penalty1.size()},
             {"penalty2_tasks", batch.penalty2.size()}};
    json tasks = json::array();
    for (const auto& t : batch.bonus) tasks.push_back({{"task_id", t.id}, {"set", "bonus"}, {"report1", t.report1 + 1}, {"report2", t.report2 + 1}});
    for (const auto& t : batch.penalty1) tasks.push_back({{"task_id", t.id}, {"set", "penalty1"}, {"report1", t.report + 1}});
    for (const auto& t : batch.penalty2) tasks.push_back({{"task_id", t.id}, {"set", "penalty2"}, {"report2", t.report + 1}});
    doc["tasks"] = tasks;
    if (c.mechanism != "ca-df") doc["payments"] = io::payment_to_json(pay_batch(batch, fixed_score(c, d), rng, penalty_mode(c)));
    return {doc, csv.str()};
}

/// CA-DF: learn both score matrices from a reports file or from m freshly sampled tasks.
Output run_learn(const Config& c) {
    const std::uint64_t seed = require_seed(c);
    Rng rng = make_rng(seed, "cli-learn");
    if (!c.reports_path.empty()) {
        std::size_t n = c.n;
        if (!c.model_path.empty()) n = io::read_model_file(c.model_path).n();
        if (n < 2) throw ValidationError("learn: give --model or --n with --reports");
        return {json{{"ca_df", ca_df_json(ca_df_pay(read_batch(c, n), n, rng, penalty_mode(c)))}}, {}};
    }
    if (c.model_path.empty()) throw ValidationError("learn: --model or --reports is required");
    const auto model = io::read_model_file(c.model_path);
    const auto f = strategy_flag(c.f, model.n(), "--f");
    const auto g = strategy_flag(c.g, model.n(), "--g");
    const auto run = run_ca_df(model, MixedStrategy::from(f), MixedStrategy::from(g), single_m(c), rng, penalty_mode(c));
    json doc = ca_df_json(run);
    doc["true_sign"] = matrix_to_rows(sign_of(delta_of(model)).sign);
    return {json{{"ca_df", doc}}, {}};
}

Output run_converge(const Config& c) {
    const auto model = io::read_model_file(c.model_path);
    if (c.trials == 0) throw ValidationError("--trials must be positive");
    const auto reports = convergence_experiment(model, c.epsilon, c.delta, parse_m_list(c.m_list), c.trials,
                                                require_seed(c), {c.threads});
    std::ostringstream csv;
    io::write_convergence_csv(reports, csv);
    return {io::convergence_to_json(reports), csv.str()};
}

Output run_ingest(const Config& c) {
    LoadOptions opt;
    opt.default_signal_count = c.n;
    const auto ds = load_csv(c.data_path, opt);
    json doc;
    doc["rows"] = ds.rows.size();
    json errors = json::array(), warnings = json::array();
    for (const auto& e : ds.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    for (const auto& w : ds.warnings) warnings.push_back({{"line", w.line}, {"message", w.message}});
    doc["errors"] = errors;
    doc["warnings"] = warnings;
    json questions = json::array();
    for (const auto& q : ds.questions()) {
        try {
            questions.push_back(io::estimate_to_json(estimate_question(ds, q)));
        } catch (const ValidationError& e) {
            questions.push_back({{"question_id", q}, {"error", e.what()}});
        }
    }
    doc["questions"] = questions;
    return {doc, {}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peer-prediction mechanism analysis: MSDG, CA and detail-free CA."};
    app.require_subcommand(1);
    Config c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
        sub->add_option("--out", c.out_path, "Write output to this file instead of stdout");
    };
    auto add_model = [&](CLI::App* sub, bool required) {
        auto* o = sub->add_option("--model", c.model_path, "Model JSON file {n, labels, joint}");
        if (required) o->required();
    };
    auto add_mechanism = [&](CLI::App* sub) {
        sub->add_option("--mechanism", c.mechanism, "msdg | ca | ca-df | custom:<path>");
    };
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", c.seed, "Master seed (u64)"); };
    auto add_strategies = [&](CLI::App* sub) {
        sub->add_option("--f", c.f, "Agent 1 strategy: 'truthful' or comma-separated reports 1..n");
        sub->add_option("--g", c.g, "Agent 2 strategy");
    };
    auto add_reports = [&](CLI::App* sub) {
        sub->add_option("--reports", c.reports_path, "Reports CSV task_id,agent,report");
        sub->add_option("--bonus", c.bonus, "Bonus task ids (explicit designation)")->delimiter(',');
        sub->add_option("--penalty1", c.penalty1, "Agent 1 penalty task ids")->delimiter(',');
        sub->add_option("--penalty2", c.penalty2, "Agent 2 penalty task ids")->delimiter(',');
        sub->add_option("--penalty-mode", c.penalty_mode, "sampled | all-pairs")->check(CLI::IsMember({"sampled", "all-pairs"}));
    };

    auto* analyze = app.add_subcommand("analyze", "Delta, sign structure and world classification");
    add_model(analyze, true);
    add_common(analyze);

    auto* verify_cmd = app.add_subcommand("verify", "Exhaustive truthfulness verdict for a mechanism");
    add_model(verify_cmd, true);
    add_mechanism(verify_cmd);
    add_common(verify_cmd);

    auto* score = app.add_subcommand("score", "Pay a reports file, or compute an analytic expected score");
    add_model(score, true);
    add_mechanism(score);
    add_seed(score);
    add_strategies(score);
    add_reports(score);
    add_common(score);

    auto* sim = app.add_subcommand("simulate", "Simulate a task batch, or a Monte-Carlo estimate with --trials");
    add_model(sim, true);
    add_mechanism(sim);
    add_seed(sim);
    add_strategies(sim);
    sim->add_option("--m", c.m_list, "Task count")->required();
    sim->add_option("--trials", c.trials, "Monte-Carlo trials");
    sim->add_option("--threads", c.threads, "Worker threads");
    sim->add_option("--penalty-mode", c.penalty_mode, "sampled | all-pairs")->check(CLI::IsMember({"sampled", "all-pairs"}));
    add_common(sim);

    auto* learn = app.add_subcommand("learn", "Detail-free CA: learn score matrices from split reports");
    add_model(learn, false);
    add_seed(learn);
    add_strategies(learn);
    add_reports(learn);
    learn->add_option("--m", c.m_list, "Tasks to sample when no reports file is given");
    learn->add_option("--n", c.n, "Signal count when only --reports is given");
    add_common(learn);

    auto* converge = app.add_subcommand("converge", "Detail-free CA convergence experiment");
    add_model(converge, true);
    add_seed(converge);
    converge->add_option("--m", c.m_list, "Comma-separated m schedule")->required();
    converge->add_option("--trials", c.trials, "Trials per m")->required();
    converge->add_option("--epsilon", c.epsilon, "Gap target");
    converge->add_option("--delta", c.delta, "Failure probability target");
    converge->add_option("--threads", c.threads, "Worker threads");
    add_common(converge);

    auto* feas = app.add_subcommand("feasibility", "Search for any strongly truthful score matrix");
    add_model(feas, true);
    add_common(feas);

    auto* ingest = app.add_subcommand("ingest", "Per-question Delta estimates from peer-assessment CSV");
    ingest->add_option("--data", c.data_path, "CSV question_id,submission_id,grader_id,report")->required();
    ingest->add_option("--n", c.n, "Signal count for every question (default: largest report seen)");
    add_common(ingest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        // Randomized subcommands must be seeded explicitly; checked before any file is read.
        const bool randomized = *sim || *learn || *converge || (*score && !c.reports_path.empty());
        if (randomized && !c.seed) throw ValidationError("--seed is required for randomized subcommands");
        Output out;
        if (*analyze) out = run_analyze(c);
        else if (*verify_cmd) out = run_verify(c);
        else if (*score) out = run_score(c);
        else if (*sim) out = run_simulate(c);
        else if (*learn) out = run_learn(c);
        else if (*converge) out = run_converge(c);
        else if (*feas) out = run_feasibility(c);
        else out = run_ingest(c);
        emit(c, out);
    } catch (const CapExceededError& e) {
        std::cerr << "error: " << e.what() << " (cap " << e.cap() << ")\n";
        return 3;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
