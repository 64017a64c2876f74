#include <fstream>
#include <set>
#include <sstream>

#include "opcalc/cli.hpp"

namespace opcalc::cli {

std::optional<std::string> JobDecl::get(const std::string& key) const {
    for (const auto& [k, v] : params)
        if (k == key) return v;
    return std::nullopt;
}

std::string SpecError::str() const {
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
}

namespace {

std::string join_errors(const std::vector<SpecError>& es) {
    std::string out;
    for (const auto& e : es) out += (out.empty() ? "" : "\n") + e.str();
    return out;
}

}  // namespace

SpecErrors::SpecErrors(std::vector<SpecError> errors) : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

struct Token {
    std::string text;
    int col;
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#') ++j;
        out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
        i = j;
    }
    return out;
}

class Parser {
public:
    ParseResult run(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_;
            auto toks = tokenize(raw);
            if (toks.empty()) continue;
            try {
                if (toks[0].text.front() == '[') {
                    header(raw, toks);
                } else {
                    body(toks);
                }
            } catch (const Located& e) {
                res_.errors.push_back({line_, e.col, e.msg});
            }
        }
        return std::move(res_);
    }

private:
    struct Located {
        int col;
        std::string msg;
    };
    enum class Sec { top, complex, sequence, operad, algebra, map, jobs };

    [[noreturn]] void fail(const Token& t, const std::string& msg) { throw Located{t.col, msg}; }

    int to_int(const Token& t) {
        try {
            std::size_t pos = 0;
            int v = std::stoi(t.text, &pos);
            if (pos == t.text.size()) return v;
        } catch (const std::exception&) {
        }
        fail(t, "expected an integer, got '" + t.text + "'");
    }

    Scalar to_scalar(const Token& t) {
        try {
            return Field().parse_scalar(t.text);
        } catch (const std::exception&) {
            fail(t, "expected a rational coefficient, got '" + t.text + "'");
        }
    }

    void expect_count(const std::vector<Token>& toks, std::size_t n, const std::string& usage) {
        if (toks.size() != n) fail(toks.size() > n ? toks[n] : toks.back(), "usage: " + usage);
    }

    // Terms after "->": coefficient/label pairs, '+' separators allowed.
    std::vector<Term> terms(const std::vector<Token>& toks, std::size_t from) {
        std::vector<Term> out;
        std::size_t k = from;
        while (k < toks.size()) {
            if (toks[k].text == "+") {
                ++k;
                continue;
            }
            if (k + 1 >= toks.size()) fail(toks[k], "expected '<coefficient> <label>'");
            out.push_back({to_scalar(toks[k]), toks[k + 1].text});
            k += 2;
        }
        return out;
    }

    std::size_t arrow(const std::vector<Token>& toks) {
        for (std::size_t k = 0; k < toks.size(); ++k)
            if (toks[k].text == "->") return k;
        fail(toks.back(), "missing '->'");
    }

    void header(const std::string& raw, const std::vector<Token>& toks) {
        auto open = raw.find('['), close = raw.find(']');
        if (close == std::string::npos) fail(toks[0], "unterminated section header");
        auto inner = tokenize(raw.substr(open + 1, close - open - 1));
        if (inner.empty()) fail(toks[0], "empty section header");
        const std::string& kind = inner[0].text;
        int col = static_cast<int>(open) + 1;
        if (kind == "jobs") {
            if (inner.size() != 1) throw Located{col, "[jobs] takes no name"};
            sec_ = Sec::jobs;
            return;
        }
        if (inner.size() != 2) throw Located{col, "section header must be [" + kind + " NAME]"};
        std::string name = inner[1].text;
        std::set<std::string>* names = nullptr;
        if (kind == "complex") {
            sec_ = Sec::complex;
            res_.spec.complexes.push_back({line_, name, {}, {}});
            names = &complex_names_;
        } else if (kind == "sequence") {
            sec_ = Sec::sequence;
            res_.spec.sequences.push_back({line_, name, false, {}, {}});
            names = &sequence_names_;
        } else if (kind == "operad") {
            sec_ = Sec::operad;
            OperadDecl d;
            d.line = line_;
            d.name = name;
            res_.spec.operads.push_back(d);
            names = &operad_names_;
        } else if (kind == "algebra") {
            sec_ = Sec::algebra;
            AlgebraDecl d;
            d.line = line_;
            d.name = name;
            res_.spec.algebras.push_back(d);
            names = &algebra_names_;
        } else if (kind == "map") {
            sec_ = Sec::map;
            MapDecl d;
            d.line = line_;
            d.name = name;
            res_.spec.maps.push_back(d);
            names = &map_names_;
        } else {
            throw Located{col, "unknown section kind '" + kind + "'"};
        }
        if (!names->insert(name).second) throw Located{col, kind + " '" + name + "' declared twice"};
    }

    void body(const std::vector<Token>& toks) {
        const std::string& key = toks[0].text;
        switch (sec_) {
            case Sec::top:
                if (key != "field") fail(toks[0], "expected 'field' or a section header");
                expect_count(toks, 2, "field Q | field Fp:<p>");
                try {
                    Field::parse(toks[1].text);
                } catch (const std::exception& e) {
                    fail(toks[1], e.what());
                }
                res_.spec.field = toks[1].text;
                return;
            case Sec::complex: {
                auto& c = res_.spec.complexes.back();
                if (key == "d") {
                    std::size_t a = arrow(toks);
                    if (a != 2) fail(toks[0], "usage: d <label> -> <coef> <label> ...");
                    c.diffs.push_back({line_, toks[1].text, terms(toks, 3)});
                } else {
                    expect_count(toks, 2, "<label> <degree>");
                    c.basis.emplace_back(key, to_int(toks[1]));
                }
                return;
            }
            case Sec::sequence: {
                auto& s = res_.spec.sequences.back();
                if (key == "storage") {
                    expect_count(toks, 2, "storage symmetric|planar");
                    if (toks[1].text != "symmetric" && toks[1].text != "planar")
                        fail(toks[1], "storage must be symmetric or planar");
                    s.planar = toks[1].text == "planar";
                } else if (key == "level") {
                    expect_count(toks, 3, "level <n> <complex>");
                    s.levels.emplace_back(to_int(toks[1]), toks[2].text);
                } else if (key == "tau") {
                    std::size_t a = arrow(toks);
                    if (a != 4) fail(toks[0], "usage: tau <n> <i> <label> -> <coef> <label> ...");
                    s.taus.push_back({line_, to_int(toks[1]), to_int(toks[2]), toks[3].text, terms(toks, 5)});
                } else {
                    fail(toks[0], "unknown sequence directive '" + key + "'");
                }
                return;
            }
            case Sec::operad: {
                auto& o = res_.spec.operads.back();
                if (key == "builtin") {
                    if (toks.size() != 2 && toks.size() != 3) fail(toks[0], "usage: builtin <name> [m]");
                    o.builtin = toks[1].text;
                    if (toks.size() == 3) o.m = to_int(toks[2]);
                } else if (key == "cap") {
                    expect_count(toks, 2, "cap <n>");
                    o.cap = to_int(toks[1]);
                } else if (key == "sequence") {
                    expect_count(toks, 2, "sequence <name>");
                    o.sequence = toks[1].text;
                } else if (key == "unit") {
                    expect_count(toks, 2, "unit <label>");
                    o.unit = toks[1].text;
                } else if (key == "gamma") {
                    std::size_t a = arrow(toks);
                    if (a < 2) fail(toks[0], "usage: gamma <x> <s>:<label> ... -> <coef> <label> ...");
                    GammaEntry g{line_, toks[1].text, {}, terms(toks, a + 1)};
                    for (std::size_t k = 2; k < a; ++k) {
                        auto colon = toks[k].text.find(':');
                        if (colon == std::string::npos) fail(toks[k], "expected <arity>:<label>");
                        Token num{toks[k].text.substr(0, colon), toks[k].col};
                        g.inputs.emplace_back(to_int(num), toks[k].text.substr(colon + 1));
                    }
                    o.gammas.push_back(std::move(g));
                } else {
                    fail(toks[0], "unknown operad directive '" + key + "'");
                }
                return;
            }
            case Sec::algebra: {
                auto& A = res_.spec.algebras.back();
                if (key == "operad") {
                    expect_count(toks, 2, "operad <name>");
                    A.operad = toks[1].text;
                } else if (key == "free" || key == "trivial" || key == "complex") {
                    expect_count(toks, 2, key + " <complex>");
                    if (!A.kind.empty()) fail(toks[0], "algebra kind given twice");
                    A.kind = key == "complex" ? "explicit" : key;
                    A.complex = toks[1].text;
                } else if (key == "act") {
                    std::size_t a = arrow(toks);
                    if (a < 2) fail(toks[0], "usage: act <x> <a1> ... -> <coef> <label> ...");
                    ActEntry e{line_, toks[1].text, {}, terms(toks, a + 1)};
                    for (std::size_t k = 2; k < a; ++k) e.inputs.push_back(toks[k].text);
                    A.acts.push_back(std::move(e));
                } else {
                    fail(toks[0], "unknown algebra directive '" + key + "'");
                }
                return;
            }
            case Sec::map: {
                auto& M = res_.spec.maps.back();
                if (key == "from" || key == "to") {
                    expect_count(toks, 2, key + " <algebra>");
                    (key == "from" ? M.source : M.target) = toks[1].text;
                } else if (key == "gen") {
                    std::size_t a = arrow(toks);
                    if (a != 2) fail(toks[0], "usage: gen <label> -> <coef> <word> ...");
                    std::vector<WordTerm> img;
                    for (const auto& t : terms(toks, 3)) {
                        WordTerm w{t.coef, {}};
                        std::stringstream ss(t.label);
                        std::string part;
                        while (std::getline(ss, part, '*')) {
                            if (part.empty()) fail(toks[0], "empty letter in word '" + t.label + "'");
                            w.letters.push_back(part);
                        }
                        img.push_back(std::move(w));
                    }
                    M.images.emplace_back(toks[1].text, std::move(img));
                } else {
                    fail(toks[0], "unknown map directive '" + key + "'");
                }
                return;
            }
            case Sec::jobs: {
                JobDecl j{line_, key, {}};
                // bare ranges of pairing-index-check name i and j in order
                std::vector<std::string> positional;
                if (key == "pairing-index-check") positional = {"i", "j"};
                std::size_t pos = 0;
                for (std::size_t k = 1; k < toks.size(); ++k) {
                    auto eq = toks[k].text.find('=');
                    if (eq == std::string::npos && pos < positional.size()) {
                        j.params.emplace_back(positional[pos++], toks[k].text);
                        continue;
                    }
                    if (eq == std::string::npos || eq == 0) fail(toks[k], "expected key=value");
                    j.params.emplace_back(toks[k].text.substr(0, eq), toks[k].text.substr(eq + 1));
                }
                res_.spec.jobs.push_back(std::move(j));
                return;
            }
        }
    }

    ParseResult res_;
    Sec sec_ = Sec::top;
    int line_ = 0;
    std::set<std::string> complex_names_, sequence_names_, operad_names_, algebra_names_, map_names_;
};

void write_terms(std::ostream& os, const std::vector<Term>& ts) {
    os << " ->";
    for (std::size_t k = 0; k < ts.size(); ++k) os << (k ? " + " : " ") << ts[k].coef.str() << " " << ts[k].label;
}

}  // namespace

ParseResult parse_spec_text(const std::string& text) { return Parser().run(text); }

SpecFile parse_spec(const std::string& path, const RunOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecErrors({{0, 0, "cannot open " + path}});
    std::stringstream ss;
    ss << in.rdbuf();
    ParseResult r = parse_spec_text(ss.str());
    if (!r.errors.empty()) throw SpecErrors(r.errors);
    auto errs = validate_spec(r.spec, opt);
    if (!errs.empty()) throw SpecErrors(errs);
    return r.spec;
}

std::string write_spec(const SpecFile& s) {
    std::ostringstream os;
    os << "field " << s.field << "\n";
    for (const auto& c : s.complexes) {
        os << "\n[complex " << c.name << "]\n";
        for (const auto& [l, d] : c.basis) os << l << " " << d << "\n";
        for (const auto& e : c.diffs) {
            os << "d " << e.source;
            write_terms(os, e.image);
            os << "\n";
        }
    }
    for (const auto& q : s.sequences) {
        os << "\n[sequence " << q.name << "]\nstorage " << (q.planar ? "planar" : "symmetric") << "\n";
        for (const auto& [n, c] : q.levels) os << "level " << n << " " << c << "\n";
        for (const auto& t : q.taus) {
            os << "tau " << t.n << " " << t.i << " " << t.source;
            write_terms(os, t.image);
            os << "\n";
        }
    }
    for (const auto& o : s.operads) {
        os << "\n[operad " << o.name << "]\n";
        if (!o.builtin.empty()) os << "builtin " << o.builtin << (o.m ? " " + std::to_string(o.m) : "") << "\n";
        if (o.cap) os << "cap " << *o.cap << "\n";
        if (!o.sequence.empty()) os << "sequence " << o.sequence << "\n";
        if (!o.unit.empty()) os << "unit " << o.unit << "\n";
        for (const auto& g : o.gammas) {
            os << "gamma " << g.x;
            for (const auto& [n, l] : g.inputs) os << " " << n << ":" << l;
            write_terms(os, g.image);
            os << "\n";
        }
    }
    for (const auto& A : s.algebras) {
        os << "\n[algebra " << A.name << "]\n";
        if (!A.operad.empty()) os << "operad " << A.operad << "\n";
        if (!A.kind.empty()) os << (A.kind == "explicit" ? "complex" : A.kind) << " " << A.complex << "\n";
        for (const auto& e : A.acts) {
            os << "act " << e.x;
            for (const auto& l : e.inputs) os << " " << l;
            write_terms(os, e.image);
            os << "\n";
        }
    }
    for (const auto& M : s.maps) {
        os << "\n[map " << M.name << "]\n";
        if (!M.source.empty()) os << "from " << M.source << "\n";
        if (!M.target.empty()) os << "to " << M.target << "\n";
        for (const auto& [g, img] : M.images) {
            os << "gen " << g << " ->";
            for (std::size_t k = 0; k < img.size(); ++k) {
                os << (k ? " + " : " ") << img[k].coef.str() << " ";
                for (std::size_t l = 0; l < img[k].letters.size(); ++l) os << (l ? "*" : "") << img[k].letters[l];
            }
            os << "\n";
        }
    }
    if (!s.jobs.empty()) {
        os << "\n[jobs]\n";
        for (const auto& j : s.jobs) {
            os << j.kind;
            for (const auto& [k, v] : j.params) os << " " << k << "=" << v;
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace opcalc::cli
