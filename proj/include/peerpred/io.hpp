#pragma once

#include "peerpred/detail_free.hpp"
#include "peerpred/errors.hpp"
#include "peerpred/ingestion.hpp"
#include "peerpred/scoring.hpp"
#include "peerpred/signal_model.hpp"
#include "peerpred/strategy_analysis.hpp"

#include "json.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

// File formats use 1-based signal/report numbers; the library API is 0-based.
namespace peerpred::io {

using nlohmann::json;

namespace detail {

inline Matrix matrix_field(const json& doc, const std::string& field) {
    if (!doc.contains(field)) throw ValidationError("missing field '" + field + "'");
    const json& rows = doc.at(field);
    if (!rows.is_array() || rows.empty()) throw ValidationError("field '" + field + "' must be a non-empty array of rows");
    const std::size_t r = rows.size();
    std::size_t c = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (!rows[i].is_array()) throw ValidationError("field '" + field + "' row " + std::to_string(i + 1) + " is not an array");
        if (i == 0) c = rows[i].size();
        if (rows[i].size() != c) throw ValidationError("field '" + field + "' is ragged at row " + std::to_string(i + 1));
    }
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            if (!rows[i][j].is_number()) {
                throw ValidationError("field '" + field + "' entry (" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + ") is not a number");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
        }
    }
    return m;
}

inline json matrix_json(const Matrix& m) { return json(matrix_to_rows(m)); }
inline json matrix_json(const IntMatrix& m) { return json(matrix_to_rows(m)); }

inline json parse(std::istream& in, const std::string& what) {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": malformed JSON (" + std::string(e.what()) + ")");
    }
}

inline std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

}  // namespace detail

// ---- model -----------------------------------------------------------------------------

inline JointSignalModel model_from_json(const json& doc, double prob_tol = kDefaultTolerances.prob) {
    if (!doc.is_object()) throw ValidationError("model: document must be a JSON object");
    Matrix joint = detail::matrix_field(doc, "joint");
    if (doc.contains("n")) {
        if (!doc["n"].is_number_integer()) throw ValidationError("field 'n' must be an integer");
        if (doc["n"].get<long>() != joint.rows()) {
            throw ValidationError("field 'n' is " + std::to_string(doc["n"].get<long>()) + " but 'joint' has " +
                                  std::to_string(joint.rows()) + " rows");
        }
    }
    std::vector<std::string> labels;
    if (doc.contains("labels")) {
        if (!doc["labels"].is_array()) throw ValidationError("field 'labels' must be an array of strings");
        for (const auto& l : doc["labels"]) {
            if (!l.is_string()) throw ValidationError("field 'labels' must be an array of strings");
            labels.push_back(l.get<std::string>());
        }
    }
    return JointSignalModel::create(std::move(joint), std::move(labels), prob_tol);
}

inline JointSignalModel read_model(std::istream& in) { return model_from_json(detail::parse(in, "model")); }
inline JointSignalModel read_model_file(const std::string& path) {
    auto in = detail::open(path);
    return read_model(in);
}

inline json model_to_json(const JointSignalModel& model, bool with_derived = false) {
    json doc;
    doc["n"] = model.n();
    doc["labels"] = model.labels();
    doc["joint"] = detail::matrix_json(model.joint());
    if (with_derived) {
        const DeltaMatrix d = delta_of(model);
        doc["delta"] = detail::matrix_json(d.values());
        doc["sign"] = detail::matrix_json(sign_of(d).sign);
    }
    return doc;
}

// ---- score matrices and strategies ----------------------------------------------------

inline ScoreMatrix score_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("score: document must be a JSON object");
    return ScoreMatrix::custom(detail::matrix_field(doc, "s"));
}

inline ScoreMatrix read_score_file(const std::string& path) {
    auto in = detail::open(path);
    return score_from_json(detail::parse(in, "score matrix"));
}

inline json score_to_json(const ScoreMatrix& s) { return json{{"s", detail::matrix_json(s.values())}}; }

inline json strategy_to_json(const DeterministicStrategy& s) {
    json arr = json::array();
    for (auto r : s.report_for) arr.push_back(r + 1);
    return arr;
}

inline DeterministicStrategy strategy_from_json(const json& arr) {
    if (!arr.is_array()) throw ValidationError("strategy: expected an array of reports");
    DeterministicStrategy s;
    for (const auto& v : arr) {
        if (!v.is_number_integer() || v.get<long>() < 1 || v.get<std::size_t>() > arr.size()) {
            throw ValidationError("strategy: reports must be integers in 1..n");
        }
        s.report_for.push_back(v.get<std::size_t>() - 1);
    }
    return s;
}

/// "1,1,2" -> deterministic strategy (1-based reports).
inline DeterministicStrategy parse_strategy(const std::string& text) {
    DeterministicStrategy s;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        std::size_t v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size() || v < 1) {
            throw ValidationError("strategy: cannot parse '" + text + "' as comma-separated reports 1..n");
        }
        s.report_for.push_back(v - 1);
    }
    if (!s.is_valid()) throw ValidationError("strategy: '" + text + "' has reports outside 1..n");
    return s;
}

// ---- verdicts --------------------------------------------------------------------------

inline json profile_to_json(const Profile& p) {
    return json{{"f", strategy_to_json(p.f)}, {"g", strategy_to_json(p.g)}, {"score", p.score}};
}

inline Profile profile_from_json(const json& doc) {
    return Profile{strategy_from_json(doc.at("f")), strategy_from_json(doc.at("g")), doc.at("score").get<double>()};
}

inline json optional_profile(const std::optional<Profile>& p) { return p ? profile_to_json(*p) : json(nullptr); }

inline std::optional<Profile> optional_profile_from(const json& doc) {
    if (doc.is_null()) return std::nullopt;
    return profile_from_json(doc);
}

inline std::string method_name(VerifyMethod m) {
    switch (m) {
        case VerifyMethod::exhaustive: return "exhaustive";
        case VerifyMethod::decomposed: return "decomposed";
        default: return "automatic";
    }
}

inline json verdict_to_json(const TruthfulnessVerdict& v) {
    json doc;
    doc["n"] = v.n;
    doc["method"] = method_name(v.method);
    doc["strictly_proper"] = v.strictly_proper;
    doc["strongly_truthful"] = v.strongly_truthful;
    doc["informed_truthful"] = v.informed_truthful;
    doc["truthful_score"] = v.truthful_score;
    doc["max_score"] = v.max_score;
    doc["max_uninformed_abs"] = v.max_uninformed_abs;
    doc["best_profiles"] = json::array();
    for (const auto& p : v.best_profiles) doc["best_profiles"].push_back(profile_to_json(p));
    doc["best_profiles_complete"] = v.best_profiles_complete;
    doc["witness_violation"] = optional_profile(v.witness_violation);
    doc["informed_witness"] = optional_profile(v.informed_witness);
    doc["proper_witness"] = optional_profile(v.proper_witness);
    doc["strong_witnesses"] = {{"unilateral", optional_profile(v.strong_witnesses.unilateral)},
                               {"symmetric", optional_profile(v.strong_witnesses.symmetric)},
                               {"asymmetric_permutation", optional_profile(v.strong_witnesses.asymmetric_permutation)},
                               {"other", optional_profile(v.strong_witnesses.other)}};
    json caveats = json::array();
    if (v.degenerate_delta_entries) caveats.push_back("degenerate_delta_entries");
    if (v.asymmetric_delta) caveats.push_back("asymmetric_delta");
    doc["caveats"] = caveats;
    return doc;
}

inline TruthfulnessVerdict verdict_from_json(const json& doc) {
    TruthfulnessVerdict v;
    v.n = doc.at("n").get<std::size_t>();
    const auto method = doc.at("method").get<std::string>();
    v.method = method == "decomposed" ? VerifyMethod::decomposed : VerifyMethod::exhaustive;
    v.strictly_proper = doc.at("strictly_proper").get<bool>();
    v.strongly_truthful = doc.at("strongly_truthful").get<bool>();
    v.informed_truthful = doc.at("informed_truthful").get<bool>();
    v.truthful_score = doc.at("truthful_score").get<double>();
    v.max_score = doc.at("max_score").get<double>();
    v.max_uninformed_abs = doc.at("max_uninformed_abs").get<double>();
    for (const auto& p : doc.at("best_profiles")) v.best_profiles.push_back(profile_from_json(p));
    v.best_profiles_complete = doc.at("best_profiles_complete").get<bool>();
    v.witness_violation = optional_profile_from(doc.at("witness_violation"));
    v.informed_witness = optional_profile_from(doc.at("informed_witness"));
    v.proper_witness = optional_profile_from(doc.at("proper_witness"));
    const auto& sw = doc.at("strong_witnesses");
    v.strong_witnesses.unilateral = optional_profile_from(sw.at("unilateral"));
    v.strong_witnesses.symmetric = optional_profile_from(sw.at("symmetric"));
    v.strong_witnesses.asymmetric_permutation = optional_profile_from(sw.at("asymmetric_permutation"));
    v.strong_witnesses.other = optional_profile_from(sw.at("other"));
    for (const auto& c : doc.at("caveats")) {
        if (c == "degenerate_delta_entries") v.degenerate_delta_entries = true;
        if (c == "asymmetric_delta") v.asymmetric_delta = true;
    }
    return v;
}

// ---- classification --------------------------------------------------------------------

inline json permutation_json(const std::vector<std::size_t>& p) {
    json arr = json::array();
    for (auto x : p) arr.push_back(x + 1);
    return arr;
}

inline std::vector<std::size_t> permutation_from(const json& arr) {
    std::vector<std::size_t> p;
    for (const auto& x : arr) p.push_back(x.get<std::size_t>() - 1);
    return p;
}

inline json classification_to_json(const WorldClassification& c) {
    json doc;
    doc["categorical"] = c.categorical;
    doc["clustered_signals"] = c.clustered_signals;
    doc["cluster_witness"] = nullptr;
    if (c.cluster_witness) {
        doc["cluster_witness"] = {
            {"axis", c.cluster_witness->axis == ClusterWitness::Axis::row ? "row" : "column"},
            {"signals", {c.cluster_witness->first + 1, c.cluster_witness->second + 1}}};
    }
    doc["paired_permutations"] = c.paired_permutations;
    doc["permutation_witness"] = nullptr;
    if (c.permutation_witness) {
        doc["permutation_witness"] = {{"p", permutation_json(c.permutation_witness->p)},
                                      {"q", permutation_json(c.permutation_witness->q)}};
    }
    doc["stochastically_relevant"] = c.stochastically_relevant;
    doc["has_zero_delta_entries"] = c.has_zero_delta_entries;
    doc["exchangeable"] = c.exchangeable;
    return doc;
}

inline WorldClassification classification_from_json(const json& doc) {
    WorldClassification c;
    c.categorical = doc.at("categorical").get<bool>();
    c.clustered_signals = doc.at("clustered_signals").get<bool>();
    if (!doc.at("cluster_witness").is_null()) {
        const auto& w = doc["cluster_witness"];
        c.cluster_witness = ClusterWitness{w.at("axis") == "row" ? ClusterWitness::Axis::row : ClusterWitness::Axis::column,
                                           w.at("signals")[0].get<std::size_t>() - 1,
                                           w.at("signals")[1].get<std::size_t>() - 1};
    }
    c.paired_permutations = doc.at("paired_permutations").get<bool>();
    if (!doc.at("permutation_witness").is_null()) {
        const auto& w = doc["permutation_witness"];
        c.permutation_witness = PermutationPair{permutation_from(w.at("p")), permutation_from(w.at("q"))};
    }
    c.stochastically_relevant = doc.at("stochastically_relevant").get<bool>();
    c.has_zero_delta_entries = doc.at("has_zero_delta_entries").get<bool>();
    c.exchangeable = doc.at("exchangeable").get<bool>();
    return c;
}

// ---- feasibility -----------------------------------------------------------------------

inline json feasibility_to_json(const FeasibilityResult& r) {
    json doc;
    doc["feasible"] = r.feasible;
    doc["score_matrix"] = r.score_matrix ? detail::matrix_json(r.score_matrix->values()) : json(nullptr);
    doc["margin"] = r.margin;
    doc["certified"] = r.certified;
    doc["rounds"] = r.rounds;
    doc["cuts"] = r.cuts;
    return doc;
}

inline FeasibilityResult feasibility_from_json(const json& doc) {
    FeasibilityResult r;
    r.feasible = doc.at("feasible").get<bool>();
    if (!doc.at("score_matrix").is_null()) r.score_matrix = ScoreMatrix::custom(detail::matrix_field(doc, "score_matrix"));
    r.margin = doc.at("margin").get<double>();
    r.certified = doc.at("certified").get<bool>();
    r.rounds = doc.at("rounds").get<std::size_t>();
    r.cuts = doc.at("cuts").get<std::size_t>();
    return r;
}

// ---- convergence -----------------------------------------------------------------------

inline json convergence_to_json(const std::vector<ConvergenceReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back({{"n", r.n},
                       {"m", r.m},
                       {"epsilon", r.epsilon},
                       {"delta", r.delta},
                       {"trials", r.trials},
                       {"empirical_prob_sign_correct", r.empirical_prob_sign_correct},
                       {"empirical_gap", r.empirical_gap},
                       {"fraction_within_epsilon", r.fraction_within_epsilon},
                       {"gap_bound_violations", r.gap_bound_violations},
                       {"optimality_violations", r.optimality_violations},
                       {"pass", r.pass}});
    }
    return json{{"reports", arr}};
}

/// Summary fields only; per-trial rows travel in the CSV form.
inline std::vector<ConvergenceReport> convergence_from_json(const json& doc) {
    std::vector<ConvergenceReport> out;
    for (const auto& r : doc.at("reports")) {
        ConvergenceReport c;
        c.n = r.at("n").get<std::size_t>();
        c.m = r.at("m").get<std::size_t>();
        c.epsilon = r.at("epsilon").get<double>();
        c.delta = r.at("delta").get<double>();
        c.trials = r.at("trials").get<std::size_t>();
        c.empirical_prob_sign_correct = r.at("empirical_prob_sign_correct").get<double>();
        c.empirical_gap = r.at("empirical_gap").get<double>();
        c.fraction_within_epsilon = r.at("fraction_within_epsilon").get<double>();
        c.gap_bound_violations = r.at("gap_bound_violations").get<std::size_t>();
        c.optimality_violations = r.at("optimality_violations").get<std::size_t>();
        c.pass = r.at("pass").get<bool>();
        out.push_back(std::move(c));
    }
    return out;
}

inline void write_convergence_csv(const std::vector<ConvergenceReport>& reports, std::ostream& os) {
    os << "m,trial,sign_correct,gap\n";
    for (const auto& r : reports) {
        for (const auto& row : r.rows) {
            os << r.m << ',' << row.trial << ',' << (row.sign_correct ? 1 : 0) << ',' << json(row.gap).dump() << '\n';
        }
    }
}

// ---- payments --------------------------------------------------------------------------

inline json payment_to_json(const PaymentRecord& rec) {
    json rows = json::array();
    for (const auto& p : rec.per_bonus_task) {
        rows.push_back({{"task_id", p.id}, {"score_on_bonus", p.score_on_bonus}, {"penalty_term", p.penalty_term}, {"net", p.net}});
    }
    return json{{"per_bonus_task", rows}, {"total", rec.total}};
}

// ---- reports CSV -----------------------------------------------------------------------

/// Writes `task_id,agent,report`; bonus tasks produce one row per agent.
inline void write_reports_csv(const TaskBatch& batch, std::ostream& os) {
    os << "task_id,agent,report\n";
    for (const auto& t : batch.bonus) {
        os << t.id << ",1," << t.report1 + 1 << '\n';
        os << t.id << ",2," << t.report2 + 1 << '\n';
    }
    for (const auto& t : batch.penalty1) os << t.id << ",1," << t.report + 1 << '\n';
    for (const auto& t : batch.penalty2) os << t.id << ",2," << t.report + 1 << '\n';
}

/// Explicit task-set membership; empty means "designate automatically".
struct Designation {
    std::vector<std::string> bonus;
    std::vector<std::string> penalty1;
    std::vector<std::string> penalty2;

    bool empty() const { return bonus.empty() && penalty1.empty() && penalty2.empty(); }
};

/// Reads `task_id,agent,report`. Without a designation, tasks reported by both agents are bonus
/// tasks and the rest are penalty tasks of the agent that reported them.
inline TaskBatch read_reports_csv(std::istream& in, std::size_t n, const Designation& designation = {}) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("reports csv: empty input");
    const auto header = peerpred::detail::split_csv_line(line);
    if (header != std::vector<std::string>{"task_id", "agent", "report"}) {
        throw ValidationError("reports csv: header must be 'task_id,agent,report'");
    }
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> reports;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r") continue;
        const auto f = peerpred::detail::split_csv_line(line);
        const std::string where = "reports csv line " + std::to_string(line_no) + ": ";
        if (f.size() != 3) throw ValidationError(where + "expected 3 fields");
        long agent = 0, report = 0;
        auto [p1, e1] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), agent);
        auto [p2, e2] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), report);
        if (e1 != std::errc{} || p1 != f[1].data() + f[1].size() || (agent != 1 && agent != 2)) {
            throw ValidationError(where + "agent must be 1 or 2");
        }
        if (e2 != std::errc{} || p2 != f[2].data() + f[2].size() || report < 1 || static_cast<std::size_t>(report) > n) {
            throw ValidationError(where + "report '" + f[2] + "' outside 1.." + std::to_string(n));
        }
        auto [it, inserted] = reports.try_emplace(f[0]);
        if (inserted) order.push_back(f[0]);
        auto& slot = agent == 1 ? it->second.first : it->second.second;
        if (slot) throw ValidationError(where + "duplicate report by agent " + std::to_string(agent) + " on task '" + f[0] + "'");
        slot = static_cast<std::size_t>(report - 1);
    }

    TaskBatch batch;
    if (designation.empty()) {
        for (const auto& id : order) {
            const auto& [a, b] = reports[id];
            if (a && b) {
                batch.bonus.push_back({id, *a, *b});
            } else if (a) {
                batch.penalty1.push_back({id, *a});
            } else {
                batch.penalty2.push_back({id, *b});
            }
        }
        return batch;
    }

    auto lookup = [&](const std::string& id, int agent) {
        auto it = reports.find(id);
        const auto& slot = it == reports.end() ? std::optional<std::size_t>{}
                                               : (agent == 1 ? it->second.first : it->second.second);
        if (!slot) throw ValidationError("reports csv: task '" + id + "' has no report from agent " + std::to_string(agent));
        return *slot;
    };
    for (const auto& id : designation.bonus) batch.bonus.push_back({id, lookup(id, 1), lookup(id, 2)});
    for (const auto& id : designation.penalty1) batch.penalty1.push_back({id, lookup(id, 1)});
    for (const auto& id : designation.penalty2) batch.penalty2.push_back({id, lookup(id, 2)});
    return batch;
}

/// Writes a batch in the assessment format: each task is a submission, each agent a grader.
inline void write_assessment_csv(const TaskBatch& batch, const std::string& question_id, std::ostream& os) {
    os << "question_id,submission_id,grader_id,report\n";
    for (const auto& t : batch.bonus) {
        os << question_id << ',' << t.id << ",agent1," << t.report1 + 1 << '\n';
        os << question_id << ',' << t.id << ",agent2," << t.report2 + 1 << '\n';
    }
    for (const auto& t : batch.penalty1) os << question_id << ',' << t.id << ",agent1," << t.report + 1 << '\n';
    for (const auto& t : batch.penalty2) os << question_id << ',' << t.id << ",agent2," << t.report + 1 << '\n';
}

// ---- ingestion output ------------------------------------------------------------------

inline json estimate_to_json(const EmpiricalEstimate& est) {
    json doc;
    doc["question_id"] = est.question_id;
    doc["n"] = est.n;
    doc["submissions"] = est.submissions;
    doc["pairs"] = est.pairs;
    doc["source"] = "report-based estimate";
    doc["joint"] = detail::matrix_json(est.model.joint());
    doc["delta"] = detail::matrix_json(est.delta.values());
    doc["sign"] = detail::matrix_json(sign_of(est.delta).sign);
    doc["classification"] = classification_to_json(classify(est.model));
    return doc;
}

}  // namespace peerpred::io
