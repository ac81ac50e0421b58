#pragma once

#include "peerpred/errors.hpp"
#include "peerpred/matrix.hpp"
#include "peerpred/signal_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace peerpred {

struct AssessmentRow {
    std::string question_id;
    std::string submission_id;
    std::string grader_id;
    std::size_t report;  ///< 0-based; the file stores 1..n
};

struct RowIssue {
    std::size_t line;
    std::string message;
};

/// Peer-assessment reports. Graders' rubric scores stand in for their signals.
struct AssessmentDataset {
    std::vector<AssessmentRow> rows;
    std::map<std::string, std::size_t> signal_counts;  ///< per question
    std::vector<RowIssue> errors;                      ///< rejected rows
    std::vector<RowIssue> warnings;

    std::vector<std::string> questions() const {
        std::vector<std::string> q;
        for (const auto& [id, n] : signal_counts) q.push_back(id);
        return q;
    }
};

struct LoadOptions {
    std::map<std::string, std::size_t> signal_counts;  ///< declared range 1..n per question
    std::size_t default_signal_count = 0;              ///< 0: infer from the largest report seen
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return out;
}

}  // namespace detail

/// Parses `question_id,submission_id,grader_id,report`. Malformed rows go to `errors`; a repeated
/// (question, submission, grader) keeps the last report and records a warning.
inline AssessmentDataset load_csv(std::istream& in, const LoadOptions& opt = {}) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("assessment csv: empty input");
    const auto header = detail::split_csv_line(line);
    const char* required[] = {"question_id", "submission_id", "grader_id", "report"};
    std::size_t col[4];
    for (std::size_t k = 0; k < 4; ++k) {
        auto it = std::find(header.begin(), header.end(), required[k]);
        if (it == header.end()) throw ValidationError(std::string("assessment csv: missing column '") + required[k] + "'");
        col[k] = static_cast<std::size_t>(it - header.begin());
    }

    struct Pending {
        AssessmentRow row;
        std::size_t line;
        long value;
    };
    std::vector<Pending> pending;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
    AssessmentDataset ds;

    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            ds.errors.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size())});
            continue;
        }
        const std::string& rep = fields[col[3]];
        long value = 0;
        const auto [ptr, ec] = std::from_chars(rep.data(), rep.data() + rep.size(), value);
        if (ec != std::errc{} || ptr != rep.data() + rep.size()) {
            ds.errors.push_back({line_no, "report '" + rep + "' is not an integer"});
            continue;
        }
        AssessmentRow row{fields[col[0]], fields[col[1]], fields[col[2]], 0};
        auto key = std::make_tuple(row.question_id, row.submission_id, row.grader_id);
        if (auto it = seen.find(key); it != seen.end()) {
            ds.warnings.push_back({line_no, "duplicate grade by '" + row.grader_id + "' on submission '" +
                                                row.submission_id + "'; keeping the later row"});
            pending[it->second] = {std::move(row), line_no, value};
            continue;
        }
        seen.emplace(std::move(key), pending.size());
        pending.push_back({std::move(row), line_no, value});
    }

    std::map<std::string, std::size_t> inferred;
    for (const auto& p : pending) {
        auto& mx = inferred[p.row.question_id];
        if (p.value > 0) mx = std::max(mx, static_cast<std::size_t>(p.value));
    }
    for (auto& [q, mx] : inferred) {
        if (auto it = opt.signal_counts.find(q); it != opt.signal_counts.end()) {
            mx = it->second;
        } else if (opt.default_signal_count > 0) {
            mx = opt.default_signal_count;
        }
    }

    for (auto& p : pending) {
        const std::size_t n = inferred[p.row.question_id];
        if (p.value < 1 || static_cast<std::size_t>(p.value) > n) {
            ds.errors.push_back({p.line, "report " + std::to_string(p.value) + " outside declared range 1.." +
                                             std::to_string(n) + " for question '" + p.row.question_id + "'"});
            continue;
        }
        p.row.report = static_cast<std::size_t>(p.value - 1);
        ds.rows.push_back(std::move(p.row));
    }
    for (const auto& row : ds.rows) ds.signal_counts[row.question_id] = inferred[row.question_id];
    std::sort(ds.errors.begin(), ds.errors.end(), [](const RowIssue& a, const RowIssue& b) { return a.line < b.line; });
    return ds;
}

inline AssessmentDataset load_csv(const std::string& path, const LoadOptions& opt = {}) {
    std::ifstream in(path);
    if (!in) throw ValidationError("assessment csv: cannot open '" + path + "'");
    return load_csv(in, opt);
}

/// Report-based estimate for one question: joint from every unordered grader pair on a
/// submission, counted in both orientations; marginals from the joint's margins.
struct EmpiricalEstimate {
    std::string question_id;
    std::size_t n = 0;
    std::size_t submissions = 0;  ///< submissions contributing at least one pair
    std::size_t pairs = 0;        ///< unordered grader pairs
    JointSignalModel model;
    DeltaMatrix delta;
};

inline EmpiricalEstimate estimate_question(const AssessmentDataset& ds, const std::string& question_id,
                                           const Tolerances& tol = kDefaultTolerances) {
    auto nit = ds.signal_counts.find(question_id);
    if (nit == ds.signal_counts.end()) throw ValidationError("ingestion: unknown question '" + question_id + "'");
    const std::size_t n = nit->second;
    if (n < 2) throw ValidationError("ingestion: question '" + question_id + "' has fewer than 2 signals");

    std::map<std::string, std::vector<std::size_t>> by_submission;
    for (const auto& row : ds.rows) {
        if (row.question_id == question_id) by_submission[row.submission_id].push_back(row.report);
    }

    const auto k = static_cast<Eigen::Index>(n);
    Matrix counts = Matrix::Zero(k, k);
    std::size_t pairs = 0, submissions = 0;
    for (const auto& [sub, reports] : by_submission) {
        if (reports.size() < 2) continue;
        ++submissions;
        for (std::size_t a = 0; a < reports.size(); ++a) {
            for (std::size_t b = a + 1; b < reports.size(); ++b) {
                counts(static_cast<Eigen::Index>(reports[a]), static_cast<Eigen::Index>(reports[b])) += 1.0;
                counts(static_cast<Eigen::Index>(reports[b]), static_cast<Eigen::Index>(reports[a])) += 1.0;
                ++pairs;
            }
        }
    }
    if (pairs == 0) {
        throw ValidationError("ingestion: question '" + question_id + "' has no submission with two or more graders");
    }
    Matrix joint = counts / (2.0 * static_cast<double>(pairs));
    auto model = JointSignalModel::create(joint, {}, tol.prob);
    // Same summation order for rows and columns keeps Delta bit-symmetric.
    Vector marg = Vector::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) marg(i) += joint(i, j);
    }
    Matrix d(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) d(i, j) = joint(i, j) - marg(i) * marg(j);
    }
    auto delta = DeltaMatrix::from_matrix(std::move(d), tol.prob, tol.sign);
    return EmpiricalEstimate{question_id, n, submissions, pairs, std::move(model), std::move(delta)};
}

inline DeltaMatrix empirical_delta(const AssessmentDataset& ds, const std::string& question_id) {
    return estimate_question(ds, question_id).delta;
}

}  // namespace peerpred
