#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opcalc/filtration.hpp"

namespace opcalc::cli {

// ---------------------------------------------------------------------------
// Spec files: a line-oriented text format with [section NAME] headers.
// Coefficients are kept as rationals and reduced into the field on use.

/// Source line of a declaration; not part of the object graph, so it never
/// affects equality.
struct SourceLine {
    int n = 0;
    SourceLine(int v = 0) : n(v) {}  // NOLINT(implicit)
    operator int() const { return n; }  // NOLINT(implicit)
    bool operator==(const SourceLine&) const { return true; }
};

struct Term {
    Scalar coef;
    std::string label;
    bool operator==(const Term&) const = default;
};

struct DiffEntry {
    SourceLine line;
    std::string source;
    std::vector<Term> image;
    bool operator==(const DiffEntry&) const = default;
};

struct ComplexDecl {
    SourceLine line;
    std::string name;
    std::vector<std::pair<std::string, int>> basis;  // label, degree
    std::vector<DiffEntry> diffs;
    bool operator==(const ComplexDecl&) const = default;
};

struct TauEntry {
    SourceLine line;
    int n = 0, i = 0;
    std::string source;
    std::vector<Term> image;
    bool operator==(const TauEntry&) const = default;
};

struct SequenceDecl {
    SourceLine line;
    std::string name;
    bool planar = false;
    std::vector<std::pair<int, std::string>> levels;  // arity, complex
    std::vector<TauEntry> taus;
    bool operator==(const SequenceDecl&) const = default;
};

struct GammaEntry {
    SourceLine line;
    std::string x;
    std::vector<std::pair<int, std::string>> inputs;  // (arity, label)
    std::vector<Term> image;
    bool operator==(const GammaEntry&) const = default;
};

struct OperadDecl {
    SourceLine line;
    std::string name;
    std::string builtin;  // empty for explicit operads
    int m = 0;            // truncated built-ins
    std::optional<int> cap;
    std::string sequence;
    std::string unit;
    std::vector<GammaEntry> gammas;
    bool operator==(const OperadDecl&) const = default;
};

struct ActEntry {
    SourceLine line;
    std::string x;
    std::vector<std::string> inputs;
    std::vector<Term> image;
    bool operator==(const ActEntry&) const = default;
};

struct AlgebraDecl {
    SourceLine line;
    std::string name;
    std::string operad;
    std::string kind;  // free | trivial | explicit
    std::string complex;
    std::vector<ActEntry> acts;
    bool operator==(const AlgebraDecl&) const = default;
};

/// A word a*b*c stands for the arity-r operation with base index 0 in
/// degree 0 applied to the generators.
struct WordTerm {
    Scalar coef;
    std::vector<std::string> letters;
    bool operator==(const WordTerm&) const = default;
};

struct MapDecl {
    SourceLine line;
    std::string name;
    std::string source, target;
    std::vector<std::pair<std::string, std::vector<WordTerm>>> images;  // generator -> image
    bool operator==(const MapDecl&) const = default;
};

struct JobDecl {
    SourceLine line;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> params;
    bool operator==(const JobDecl&) const = default;

    std::optional<std::string> get(const std::string& key) const;
};

struct SpecFile {
    std::string field = "Q";
    std::vector<ComplexDecl> complexes;
    std::vector<SequenceDecl> sequences;
    std::vector<OperadDecl> operads;
    std::vector<AlgebraDecl> algebras;
    std::vector<MapDecl> maps;
    std::vector<JobDecl> jobs;
    bool operator==(const SpecFile&) const = default;
};

struct SpecError {
    int line = 0;
    int column = 0;
    std::string message;
    std::string str() const;
};

class SpecErrors : public std::runtime_error {
public:
    explicit SpecErrors(std::vector<SpecError> errors);
    const std::vector<SpecError>& errors() const { return errors_; }

private:
    std::vector<SpecError> errors_;
};

struct ParseResult {
    SpecFile spec;
    std::vector<SpecError> errors;
};
ParseResult parse_spec_text(const std::string& text);
std::string write_spec(const SpecFile& spec);

struct RunOptions {
    std::optional<std::string> field;  // overrides the file
    int degree_cap = 10;
    int arity_cap = 10;
    int bar_cap = 4;
    bool timing = false;
};

/// Parses and validates; throws SpecErrors.
SpecFile parse_spec(const std::string& path, const RunOptions& opt = {});

// ---------------------------------------------------------------------------

/// Builds every declared object and reports located errors (unresolved
/// names, malformed matrices, d² != 0, failed operad or algebra axioms).
std::vector<SpecError> validate_spec(const SpecFile& spec, const RunOptions& opt);

struct JobResult {
    nlohmann::ordered_json report;
    bool passed = false;
    std::vector<std::pair<int, std::size_t>> betti;  // for the CSV table
};
JobResult run_job(const SpecFile& spec, std::size_t index, const RunOptions& opt);

struct Report {
    nlohmann::ordered_json json;
    std::vector<JobResult> jobs;
    bool passed = false;
};
/// Runs all jobs on up to `threads` workers; the report lists them in file order.
Report run_all(const SpecFile& spec, const RunOptions& opt, int threads);

}  // namespace opcalc::cli
