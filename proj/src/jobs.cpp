#include <atomic>
#include <chrono>
#include <set>
#include <sstream>
#include <thread>

#include "opcalc/cli.hpp"
#include "opcalc/random_fixtures.hpp"

namespace opcalc::cli {

using json = nlohmann::ordered_json;

namespace {

struct BuildError {
    int line;
    std::string msg;
};

struct ComplexObj {
    ChainComplex complex;
    std::map<std::string, std::pair<int, Index>> labels;
};

struct SequenceObj {
    SymSeq seq;
    std::map<int, const ComplexObj*> levels;
};

struct OperadObj {
    OperadPtr op;
    const SequenceObj* seq = nullptr;  // explicit operads only
};

struct AlgebraObj {
    Algebra alg;
    std::optional<FreeAlgebra> free;
    const ComplexObj* complex = nullptr;  // generators for free algebras
};

template <class T>
const T* find_decl(const std::vector<T>& v, const std::string& name) {
    for (const auto& d : v)
        if (d.name == name) return &d;
    return nullptr;
}

/// Builds declared objects on demand. One builder per job, so jobs share
/// no mutable state.
class Builder {
public:
    Builder(const SpecFile& spec, const RunOptions& opt)
        : spec_(spec), opt_(opt), field_(Field::parse(opt.field.value_or(spec.field))) {}

    const Field& field() const { return field_; }
    const RunOptions& options() const { return opt_; }

    const ComplexObj& complex(const std::string& name, int ref) {
        if (auto it = complexes_.find(name); it != complexes_.end()) return it->second;
        const ComplexDecl* d = find_decl(spec_.complexes, name);
        if (!d) throw BuildError{ref, "unresolved complex '" + name + "'"};
        return complexes_.emplace(name, build_complex(*d)).first->second;
    }

    const SequenceObj& sequence(const std::string& name, int ref) {
        if (auto it = sequences_.find(name); it != sequences_.end()) return it->second;
        const SequenceDecl* d = find_decl(spec_.sequences, name);
        if (!d) throw BuildError{ref, "unresolved sequence '" + name + "'"};
        return sequences_.emplace(name, build_sequence(*d)).first->second;
    }

    const OperadObj& operad(const std::string& name, int ref) {
        if (auto it = operads_.find(name); it != operads_.end()) return it->second;
        const OperadDecl* d = find_decl(spec_.operads, name);
        if (!d) throw BuildError{ref, "unresolved operad '" + name + "'"};
        return operads_.emplace(name, build_operad(*d)).first->second;
    }

    const AlgebraObj& algebra(const std::string& name, int ref) {
        if (auto it = algebras_.find(name); it != algebras_.end()) return it->second;
        const AlgebraDecl* d = find_decl(spec_.algebras, name);
        if (!d) throw BuildError{ref, "unresolved algebra '" + name + "'"};
        return algebras_.emplace(name, build_algebra(*d)).first->second;
    }

    /// The algebra map free(V) -> B of a [map] section.
    std::pair<ChainMap, std::pair<const AlgebraObj*, const AlgebraObj*>> map(const std::string& name, int ref) {
        const MapDecl* d = find_decl(spec_.maps, name);
        if (!d) throw BuildError{ref, "unresolved map '" + name + "'"};
        const AlgebraObj& A = algebra(d->source, d->line);
        const AlgebraObj& B = algebra(d->target, d->line);
        if (!A.free) throw BuildError{d->line, "map source '" + d->source + "' must be a free algebra"};
        if (A.alg.op->name() != B.alg.op->name()) throw BuildError{d->line, "map between algebras over different operads"};
        const ComplexObj& V = *A.complex;
        std::map<std::pair<int, Index>, SparseVec> img;
        for (const auto& [g, terms] : d->images) {
            auto it = V.labels.find(g);
            if (it == V.labels.end()) throw BuildError{d->line, "unknown generator '" + g + "'"};
            SparseVec v;
            for (const auto& t : terms) {
                auto [deg, e] = word(B, t.letters, d->line);
                if (deg != it->second.first)
                    throw BuildError{d->line, "image of '" + g + "' has degree " + std::to_string(deg)};
                axpy(field_, v, field_.reduce(t.coef), e);
            }
            img[it->second] = v;
        }
        try {
            ChainMap gmap = ChainMap::from_images(V.complex, B.alg.complex, [&](int deg, Index j) {
                auto it = img.find({deg, j});
                return it == img.end() ? SparseVec{} : it->second;
            });
            return {extend_from_generators(*A.free, B.alg, gmap), {&A, &B}};
        } catch (const InvariantViolation&) {
            throw BuildError{d->line, "generator images do not commute with the differentials"};
        }
    }

    /// (degree, index) of a label in level n of an operad.
    std::pair<int, Index> op_label(const OperadObj& O, int n, const std::string& label, int line) {
        if (!O.seq) {
            if (label.size() > 2 && label.rfind("op", 0) == 0) {
                Index k = std::stoul(label.substr(2));
                if (k < O.op->seq().base(n).dim(0)) return {0, k};
            }
            throw BuildError{line, "built-in operad " + O.op->name() + " has no operation '" + label + "' in arity " +
                                       std::to_string(n)};
        }
        auto it = O.seq->levels.find(n);
        if (it != O.seq->levels.end()) {
            auto l = it->second->labels.find(label);
            if (l != it->second->labels.end()) return l->second;
        }
        throw BuildError{line, "no operation '" + label + "' in arity " + std::to_string(n)};
    }

private:
    ComplexObj build_complex(const ComplexDecl& d) {
        ComplexObj out;
        std::map<int, std::vector<std::string>> by_deg;
        for (const auto& [l, deg] : d.basis) {
            if (out.labels.count(l)) throw BuildError{d.line, "label '" + l + "' declared twice in complex " + d.name};
            out.labels[l] = {deg, static_cast<Index>(by_deg[deg].size())};
            by_deg[deg].push_back(l);
        }
        if (by_deg.empty()) {
            if (!d.diffs.empty()) throw BuildError{d.diffs.front().line, "differential on an empty complex"};
            out.complex = ChainComplex::zero(field_);
            return out;
        }
        int lo = by_deg.begin()->first, hi = by_deg.rbegin()->first;
        std::vector<std::size_t> dims;
        for (int k = lo; k <= hi; ++k) dims.push_back(by_deg.count(k) ? by_deg[k].size() : 0);
        std::vector<std::vector<SparseVec>> cols(dims.size());
        for (int k = lo; k <= hi; ++k) cols[k - lo].resize(dims[k - lo]);
        for (const auto& e : d.diffs) {
            auto s = out.labels.find(e.source);
            if (s == out.labels.end()) throw BuildError{e.line, "unknown label '" + e.source + "'"};
            auto [deg, j] = s->second;
            SparseVec v;
            for (const auto& t : e.image) {
                auto it = out.labels.find(t.label);
                if (it == out.labels.end()) throw BuildError{e.line, "unknown label '" + t.label + "'"};
                if (it->second.first != deg - 1)
                    throw BuildError{e.line, "d(" + e.source + ") must lie in degree " + std::to_string(deg - 1)};
                axpy(field_, v, field_.reduce(t.coef), unit_vec(field_, it->second.second));
            }
            axpy(field_, cols[deg - lo][j], field_.from_int(1), v);
        }
        std::vector<Matrix> diffs;
        for (int k = lo; k <= hi; ++k)
            diffs.push_back(Matrix::from_columns(field_, k > lo ? dims[k - lo - 1] : 0, cols[k - lo]));
        for (int k = lo + 2; k <= hi; ++k)
            if (!(diffs[k - 1 - lo] * diffs[k - lo]).is_zero())
                throw BuildError{d.line, "d² != 0 in complex " + d.name + " (degree " + std::to_string(k) + ")"};
        out.complex = ChainComplex(field_, lo, dims, diffs);
        return out;
    }

    SequenceObj build_sequence(const SequenceDecl& d) {
        SequenceObj out;
        int cap = 0;
        for (const auto& [n, c] : d.levels) {
            if (n < 0) throw BuildError{d.line, "negative arity"};
            if (out.levels.count(n)) throw BuildError{d.line, "level " + std::to_string(n) + " given twice"};
            out.levels[n] = &complex(c, d.line);
            cap = std::max(cap, n);
        }
        auto level = [&](int n) { return out.levels.count(n) ? out.levels[n]->complex : ChainComplex::zero(field_); };
        if (d.planar) {
            if (!d.taus.empty()) throw BuildError{d.taus.front().line, "planar sequences take no tau entries"};
            std::vector<ChainComplex> levels;
            for (int n = 0; n <= cap; ++n) levels.push_back(level(n));
            out.seq = SymSeq::planar(field_, levels);
            return out;
        }
        std::vector<SymRep> reps;
        for (int n = 0; n <= cap; ++n) {
            SymRep r = trivial_rep(level(n), std::max(n, 1));
            for (int i = 0; i + 1 < n; ++i) {
                std::map<std::pair<int, Index>, SparseVec> img;
                bool given = false;
                for (const auto& t : d.taus) {
                    if (t.n != n || t.i != i) continue;
                    given = true;
                    const ComplexObj& C = *out.levels.at(n);
                    auto s = C.labels.find(t.source);
                    if (s == C.labels.end()) throw BuildError{t.line, "unknown label '" + t.source + "'"};
                    SparseVec v;
                    for (const auto& term : t.image) {
                        auto it = C.labels.find(term.label);
                        if (it == C.labels.end() || it->second.first != s->second.first)
                            throw BuildError{t.line, "bad tau image label '" + term.label + "'"};
                        axpy(field_, v, field_.reduce(term.coef), unit_vec(field_, it->second.second));
                    }
                    img[s->second] = v;
                }
                for (const auto& t : d.taus)
                    if (t.n == n && (t.i < 0 || t.i + 1 >= n)) throw BuildError{t.line, "tau index out of range"};
                if (!given) continue;
                try {
                    r.tau[i] = ChainMap::from_images(r.complex, r.complex, [&](int deg, Index j) {
                        auto it = img.find({deg, j});
                        return it == img.end() ? SparseVec{} : it->second;
                    });
                } catch (const InvariantViolation&) {
                    throw BuildError{d.line, "tau " + std::to_string(n) + " " + std::to_string(i) + " is not a chain map"};
                }
            }
            if (n <= 1) r = trivial_rep(level(n), 1);
            try {
                r.validate();
            } catch (const InvariantViolation& e) {
                throw BuildError{d.line, "level " + std::to_string(n) + " of " + d.name + ": " + e.what()};
            }
            reps.push_back(r);
        }
        out.seq = SymSeq::symmetric(field_, reps);
        return out;
    }

    OperadObj build_operad(const OperadDecl& d) {
        OperadObj out;
        if (!d.builtin.empty()) {
            try {
                out.op = builtin_operad(field_, d.builtin, d.cap.value_or(opt_.arity_cap), d.m);
            } catch (const std::invalid_argument& e) {
                throw BuildError{d.line, e.what()};
            }
            return out;
        }
        if (d.sequence.empty()) throw BuildError{d.line, "operad " + d.name + " needs 'builtin' or 'sequence'"};
        out.seq = &sequence(d.sequence, d.line);
        if (d.unit.empty()) throw BuildError{d.line, "operad " + d.name + " needs a unit"};
        OperadObj probe{nullptr, out.seq};
        auto [udeg, uidx] = op_label(probe, 1, d.unit, d.line);
        if (udeg != 0) throw BuildError{d.line, "the unit must have degree 0"};
        GammaTable table;
        for (const auto& g : d.gammas) {
            int r = static_cast<int>(g.inputs.size());
            auto [xdeg, x] = op_label(probe, r, g.x, g.line);
            std::vector<int> sizes;
            Args ys;
            int s = 0, deg = xdeg;
            for (const auto& [sk, l] : g.inputs) {
                auto y = op_label(probe, sk, l, g.line);
                sizes.push_back(sk);
                ys.push_back(y);
                s += sk;
                deg += y.first;
            }
            SparseVec v;
            for (const auto& t : g.image) {
                auto z = op_label(probe, s, t.label, g.line);
                if (z.first != deg) throw BuildError{g.line, "gamma image '" + t.label + "' has the wrong degree"};
                axpy(field_, v, field_.reduce(t.coef), unit_vec(field_, z.second));
            }
            table[gamma_key(r, xdeg, x, sizes, ys)] = v;
        }
        try {
            out.op = explicit_operad(d.name, out.seq->seq, uidx, table);
        } catch (const std::exception& e) {
            throw BuildError{d.line, e.what()};
        }
        return out;
    }

    AlgebraObj build_algebra(const AlgebraDecl& d) {
        if (d.operad.empty()) throw BuildError{d.line, "algebra " + d.name + " needs an operad"};
        const OperadObj& O = operad(d.operad, d.line);
        if (d.kind.empty()) throw BuildError{d.line, "algebra " + d.name + " needs 'free', 'trivial' or 'complex'"};
        const ComplexObj& C = complex(d.complex, d.line);
        AlgebraObj out;
        out.complex = &C;
        try {
            if (d.kind == "free") {
                if (!d.acts.empty()) throw BuildError{d.acts.front().line, "free algebras take no act entries"};
                out.free = free_algebra_with_engine(O.op, C.complex, opt_.degree_cap);
                out.alg = out.free->algebra;
                out.alg.name = d.name;
            } else if (d.kind == "trivial") {
                if (!d.acts.empty()) throw BuildError{d.acts.front().line, "trivial algebras take no act entries"};
                out.alg = trivial_algebra(O.op, C.complex);
                out.alg.name = d.name;
            } else {
                ActTable table;
                for (const auto& a : d.acts) {
                    int r = static_cast<int>(a.inputs.size());
                    auto [xdeg, x] = op_label(O, r, a.x, a.line);
                    std::vector<std::int64_t> key{r, xdeg, static_cast<std::int64_t>(x)};
                    int deg = xdeg;
                    for (const auto& l : a.inputs) {
                        auto it = C.labels.find(l);
                        if (it == C.labels.end()) throw BuildError{a.line, "unknown label '" + l + "'"};
                        key.push_back(it->second.first);
                        key.push_back(static_cast<std::int64_t>(it->second.second));
                        deg += it->second.first;
                    }
                    SparseVec v;
                    for (const auto& t : a.image) {
                        auto it = C.labels.find(t.label);
                        if (it == C.labels.end() || it->second.first != deg)
                            throw BuildError{a.line, "act image '" + t.label + "' unknown or of the wrong degree"};
                        axpy(field_, v, field_.reduce(t.coef), unit_vec(field_, it->second.second));
                    }
                    table[key] = v;
                }
                out.alg = explicit_algebra(O.op, d.name, C.complex, table);
            }
        } catch (const std::invalid_argument& e) {
            throw BuildError{d.line, e.what()};
        }
        return out;
    }

    /// Value of a word in an algebra: letters are generators (free algebras)
    /// or basis labels.
    std::pair<int, SparseVec> word(const AlgebraObj& B, const std::vector<std::string>& letters, int line) {
        Args args;
        for (const auto& l : letters) {
            auto it = B.complex->labels.find(l);
            if (it == B.complex->labels.end()) throw BuildError{line, "unknown letter '" + l + "'"};
            auto [deg, j] = it->second;
            if (B.free) {
                const Level& lv = B.free->engine->level({B.free->layer});
                auto id = lv.find(1, 0, B.alg.op->unit(), {B.free->engine->level({}).offset(deg) + j});
                if (!id) throw BuildError{line, "generator '" + l + "' lies above the degree cap"};
                args.emplace_back(deg, *id - lv.offset(deg));
            } else {
                args.emplace_back(deg, j);
            }
        }
        int deg = 0;
        for (const auto& a : args) deg += a.first;
        if (args.size() == 1) return {deg, unit_vec(field_, args[0].second)};
        int r = static_cast<int>(args.size());
        if (B.alg.op->seq().base(r).dim(0) == 0)
            throw BuildError{line, "no degree-0 operation of arity " + std::to_string(r)};
        return {deg, B.alg.act(r, 0, 0, args)};
    }

    const SpecFile& spec_;
    RunOptions opt_;
    Field field_;
    std::map<std::string, ComplexObj> complexes_;
    std::map<std::string, SequenceObj> sequences_;
    std::map<std::string, OperadObj> operads_;
    std::map<std::string, AlgebraObj> algebras_;
};

// ---------------------------------------------------------------------------

const std::set<std::string>& job_kinds() {
    static const std::set<std::string> k{"homology",       "bar",         "tq",          "filtration",
                                         "goodwillie",     "pairing-index-check",        "pairing-map",
                                         "power-map",      "aq-lift",     "pushout-corner-check", "connectivity"};
    return k;
}

struct JobError {
    std::string msg;
};

class JobContext {
public:
    JobContext(const SpecFile& spec, const JobDecl& job, const RunOptions& opt) : b(spec, opt), job_(job) {
        for (const auto& [k, v] : job.params) params[k] = v;
    }

    std::string str(const std::string& key) {
        auto v = job_.get(key);
        if (!v) throw JobError{"missing parameter '" + key + "'"};
        used_.insert(key);
        return *v;
    }
    std::string str_or(const std::string& key, const std::string& def) { return job_.get(key) ? str(key) : def; }
    int integer(const std::string& key) {
        std::string v = str(key);
        try {
            std::size_t pos = 0;
            int x = std::stoi(v, &pos);
            if (pos == v.size()) return x;
        } catch (const std::exception&) {
        }
        throw JobError{"parameter " + key + " must be an integer"};
    }
    int integer_or(const std::string& key, int def) { return job_.get(key) ? integer(key) : def; }
    ExtNat extnat(const std::string& key) {
        try {
            return ExtNat::parse(str(key));
        } catch (const std::exception&) {
            throw JobError{"parameter " + key + " must be a natural number or inf"};
        }
    }
    ExtNat extnat_or(const std::string& key, ExtNat def) { return job_.get(key) ? extnat(key) : def; }
    /// lo..hi
    std::pair<int, int> range(const std::string& key, std::pair<int, int> def) {
        if (!job_.get(key)) return def;
        std::string v = str(key);
        auto dots = v.find("..");
        try {
            if (dots == std::string::npos) return {std::stoi(v), std::stoi(v)};
            return {std::stoi(v.substr(0, dots)), std::stoi(v.substr(dots + 2))};
        } catch (const std::exception&) {
            throw JobError{"parameter " + key + " must be lo..hi"};
        }
    }
    void check_unused() {
        for (const auto& [k, v] : job_.params)
            if (!used_.count(k)) throw JobError{"unknown parameter '" + k + "'"};
    }

    BarOptions bar_options() {
        std::string mode = str_or("mode", "exact");
        if (mode != "exact" && mode != "truncated") throw JobError{"mode must be exact or truncated"};
        return {b.options().degree_cap, mode == "exact" ? BarMode::exact : BarMode::truncated, b.options().bar_cap};
    }

    const AlgebraObj& algebra() {
        std::string name = str("algebra");
        return b.algebra(name, job_.line);
    }

    void assertion(const std::string& name, bool ok) {
        assertions.push_back({{"name", name}, {"pass", ok}});
        all_ok = all_ok && ok;
    }

    void betti_table(const ChainComplex& C, int lo, int hi) {
        json t = json::object();
        for (int d = lo; d <= hi; ++d) {
            std::size_t v = betti(C, d);
            t[std::to_string(d)] = v;
            table.emplace_back(d, v);
        }
        out["betti"] = t;
        if (job_.get("expect")) {
            std::vector<std::size_t> want;
            std::stringstream ss(str("expect"));
            std::string part;
            try {
                while (std::getline(ss, part, ',')) want.push_back(std::stoul(part));
            } catch (const std::exception&) {
                throw JobError{"expect must be a comma-separated list of Betti numbers"};
            }
            // degrees below the table are zero; above it nothing is certified
            bool ok = want.size() <= static_cast<std::size_t>(std::max(hi + 1, 0));
            for (std::size_t d = 0; d < want.size() && ok; ++d)
                ok = (static_cast<int>(d) < lo ? 0 : betti(C, static_cast<int>(d))) == want[d];
            assertion("expect", ok);
        }
    }

    Builder b;
    std::map<std::string, std::string> params;
    json out = json::object();
    json assertions = json::array();
    std::vector<std::pair<int, std::size_t>> table;
    bool all_ok = true;

private:
    const JobDecl& job_;
    std::set<std::string> used_;
};

Bimodule module_param(JobContext& jc, const OperadPtr& O) {
    std::string m = jc.str_or("module", "operad");
    if (m == "operad") return operad_bimodule(O);
    if (m == "tq") return tq_module(O);
    if (m == "zero") return zero_bimodule(O);
    auto dots = m.find("..");
    if (dots == std::string::npos) throw JobError{"module must be operad, tq, zero or i..m"};
    try {
        return filtration_module(O, {std::stoi(m.substr(0, dots)), ExtNat::parse(m.substr(dots + 2))});
    } catch (const std::invalid_argument& e) {
        throw JobError{std::string("bad module: ") + e.what()};
    }
}

void run_bar_like(JobContext& jc, const BarComplex& B) {
    jc.out["valid_through"] = B.valid_through;
    jc.out["mode"] = B.mode == BarMode::exact ? "exact" : "truncated";
    jc.betti_table(B.total, 0, B.valid_through);
}

void run_kind(JobContext& jc, const std::string& kind) {
    Builder& b = jc.b;
    const Field& F = b.field();
    if (kind == "homology") {
        const ComplexObj& C = b.complex(jc.str("complex"), 0);
        if (C.complex.empty()) {
            jc.out["betti"] = json::object();
            return;
        }
        jc.out["valid_through"] = C.complex.dmax();
        jc.betti_table(C.complex, C.complex.dmin(), C.complex.dmax());
    } else if (kind == "bar") {
        const AlgebraObj& A = jc.algebra();
        BarComplex B = bar(module_param(jc, A.alg.op), A.alg, jc.bar_options());
        run_bar_like(jc, B);
    } else if (kind == "tq") {
        const AlgebraObj& A = jc.algebra();
        BarComplex T = tq(A.alg, jc.bar_options());
        run_bar_like(jc, T);
        if (A.free) {
            bool ok = true;
            for (int d = 0; d <= T.valid_through; ++d) ok = ok && betti(T.total, d) == betti(A.complex->complex, d);
            jc.assertion("tq_equals_generators", ok);
        }
    } else if (kind == "filtration") {
        const AlgebraObj& A = jc.algebra();
        auto ctx = make_bar_context(A.alg, jc.bar_options());
        FiltrationIndex idx(jc.integer("i"), jc.extnat_or("m", ExtNat::inf()));
        run_bar_like(jc, filtration_piece(ctx, idx).complex);
    } else if (kind == "goodwillie") {
        const AlgebraObj& A = jc.algebra();
        auto ctx = make_bar_context(A.alg, jc.bar_options());
        int n = jc.integer("n");
        Bimodule M = module_param(jc, A.alg.op);
        GoodwillieStage S = goodwillie_stage(ctx, M, n);
        run_bar_like(jc, S.complex);
        if (n > 1) {
            ChainMap t = tower_map(S, goodwillie_stage(ctx, M, n - 1));
            jc.assertion("tower_map_commutes", t.commutes());
        }
    } else if (kind == "pairing-index-check") {
        auto [i0, i1] = jc.range("i", {1, 6});
        auto [j0, j1] = jc.range("j", {1, 6});
        int s_max = jc.integer_or("s_max", 36);
        // m and n run over i+1..hi+1 and j+1..hi+1, with hi+1 read as ∞
        int checked = 0, sharp = 0;
        bool ok = true;
        json bad = json::array();
        for (int i = i0; i <= i1; ++i)
            for (int m = i + 1; m <= i1 + 1; ++m)
                for (int j = j0; j <= j1; ++j)
                    for (int n = j + 1; n <= j1 + 1; ++n) {
                        ExtNat mm = m == i1 + 1 ? ExtNat::inf() : ExtNat(m);
                        ExtNat nn = n == j1 + 1 ? ExtNat::inf() : ExtNat(n);
                        ExtNat N = pairing_index(i, mm, j, nn).second;
                        ExtNat o = pairing_index_oracle(i, mm, j, nn, s_max);
                        ++checked;
                        if (o == N) ++sharp;
                        bool good = o >= N && (!(N <= ExtNat(s_max)) || o == N);
                        if (!good) {
                            ok = false;
                            bad.push_back({i, mm.str(), j, nn.str(), o.str(), N.str()});
                        }
                    }
        jc.out["checked"] = checked;
        jc.out["sharp"] = sharp;
        jc.out["violations"] = bad;
        jc.assertion("oracle_bound", ok);
    } else if (kind == "pairing-map") {
        const AlgebraObj& A = jc.algebra();
        BarOptions opt = jc.bar_options();
        FilteredAlgebra J = filtered_algebra(A.alg, {jc.integer("j"), jc.extnat_or("n", ExtNat::inf())}, opt);
        PairingMap pm = pairing_map(J, {jc.integer("i"), jc.extnat_or("m", ExtNat::inf())});
        int vt = std::min(pm.source.valid_through, pm.target.valid_through);
        jc.out["target_index"] = {pm.index.i, pm.index.m.str()};
        jc.out["valid_through"] = vt;
        json ranks = json::object();
        for (int d = 0; d <= vt; ++d) ranks[std::to_string(d)] = induced_rank(pm.map, d);
        jc.out["induced_ranks"] = ranks;
        jc.betti_table(pm.target.total, 0, vt);
        jc.assertion("chain_map", pm.map.commutes());
    } else if (kind == "power-map") {
        const AlgebraObj& A = jc.algebra();
        if (!A.free) throw JobError{"power-map needs a free algebra"};
        int n = jc.integer("n");
        BarOptions opt = jc.bar_options();
        FilteredAlgebra J1 = filtered_algebra(A.alg, {1, ExtNat::inf()}, opt);
        // generators go to their bar-degree-0 copies in J^1
        const Level& leaves = A.free->engine->level({});
        const Level& cells0 = J1.ctx->engine()->level({J1.bar.top});
        const Level& fl = A.free->engine->level({A.free->layer});
        ChainMap V_to_J = ChainMap::from_images(A.complex->complex, J1.algebra.complex, [&](int deg, Index j) -> SparseVec {
            auto g = fl.find(1, 0, A.alg.op->unit(), {leaves.offset(deg) + j});
            if (!g) return {};
            // A's generator in A, then the bar-degree-0 cell of J^1 over it
            auto id = cells0.find(1, 0, A.alg.op->unit(), {J1.ctx->engine()->level({}).offset(deg) + (*g - fl.offset(deg))});
            if (!id) return {};
            std::size_t c = *J1.bar.tot->cell_of({J1.bar.top});
            auto p = J1.bar.tot->position(c, *id);
            return p ? unit_vec(F, *p) : SparseVec{};
        });
        ChainMap f = extend_from_generators(*A.free, J1.algebra, V_to_J);
        ChainMap fn = power_map(A.alg, J1, f, n);
        int vt = J1.bar.valid_through - 1;
        jc.out["valid_through"] = vt;
        jc.assertion("chain_map", fn.commutes());
        jc.assertion("quasi_iso", is_quasi_iso(fn, vt));
        jc.betti_table(fn.source(), 0, vt);
    } else if (kind == "aq-lift") {
        std::string name = jc.str("map");
        auto [f, ab] = b.map(name, 0);
        BarOptions opt = jc.bar_options();
        AQLift L = aq_lift(aq_factorization({ab.first->alg, ab.second->alg}, {f}, opt));
        jc.out["s"] = L.report.s;
        jc.out["c"] = L.report.c;
        jc.out["valid_through"] = L.report.valid_through;
        json ranks = json::object();
        for (std::size_t d = 0; d < L.report.ranks.size(); ++d) ranks[std::to_string(d)] = L.report.ranks[d];
        jc.out["homology_ranks_of_f"] = ranks;
        jc.assertion("nullhomotopy_verified", L.report.nullhomotopies_verified);
        jc.assertion("triangle_homotopy_verified", L.report.triangle_verified);
        jc.assertion("target_connected", L.report.target_connected);
        jc.assertion("vanishing_below_2c", L.report.vanishing);
    } else if (kind == "pushout-corner-check") {
        int trials = jc.integer_or("trials", 50);
        std::mt19937_64 rng(static_cast<std::uint64_t>(jc.integer_or("seed", 1)));
        int inj = 0, qi_cases = 0, qi_ok = 0;
        for (int t = 0; t < trials; ++t) {
            PushoutTrial r = pushout_corner_trial(F, rng);
            inj += r.corner_injective;
            if (r.f1_quasi_iso) {
                ++qi_cases;
                qi_ok += r.corner_quasi_iso;
            }
        }
        jc.out["trials"] = trials;
        jc.out["injective"] = inj;
        jc.out["quasi_iso_cases"] = qi_cases;
        jc.out["quasi_iso_confirmed"] = qi_ok;
        jc.assertion("corner_injective", inj == trials);
        jc.assertion("corner_quasi_iso_when_f1_is", qi_ok == qi_cases);
    } else if (kind == "connectivity") {
        const AlgebraObj& A = jc.algebra();
        auto ctx = make_bar_context(A.alg, jc.bar_options());
        ConnectivityReport rep = connectivity_report(ctx, jc.integer("c"), jc.integer("n"));
        json entries = json::array();
        for (const auto& e : rep.entries) {
            json b = json::object();
            for (std::size_t d = 0; d < e.betti.size(); ++d) b[std::to_string(d)] = e.betti[d];
            entries.push_back({{"n", e.n}, {"valid_through", e.valid_through}, {"betti", b},
                               {"piece_connected", e.piece_ok}, {"cone_connected", e.cone_ok}});
        }
        jc.out["entries"] = entries;
        jc.assertion("connectivity", rep.ok());
    }
}

}  // namespace

std::vector<SpecError> validate_spec(const SpecFile& spec, const RunOptions& opt) {
    std::vector<SpecError> errs;
    Field F;
    try {
        F = Field::parse(opt.field.value_or(spec.field));
    } catch (const std::exception& e) {
        return {{0, 1, e.what()}};
    }
    Builder b(spec, opt);
    auto guard = [&](int line, const std::function<void()>& f) {
        try {
            f();
        } catch (const BuildError& e) {
            errs.push_back({e.line, 1, e.msg});
        } catch (const std::exception& e) {
            errs.push_back({line, 1, e.what()});
        }
    };
    for (const auto& c : spec.complexes) guard(c.line, [&] { b.complex(c.name, c.line); });
    for (const auto& s : spec.sequences) guard(s.line, [&] { b.sequence(s.name, s.line); });
    for (const auto& o : spec.operads)
        guard(o.line, [&] {
            const OperadObj& O = b.operad(o.name, o.line);
            if (O.seq) {
                auto v = validate_operad(*O.op, std::min(O.op->arity_cap(), 4));
                if (!v.empty()) throw BuildError{o.line, "operad " + o.name + " fails " + v.front().axiom + ": " + v.front().detail};
            }
        });
    for (const auto& a : spec.algebras)
        guard(a.line, [&] {
            const AlgebraObj& A = b.algebra(a.name, a.line);
            if (a.kind == "explicit") {
                auto v = validate_algebra(A.alg, std::min(A.alg.op->arity_cap(), 3));
                if (!v.empty()) throw BuildError{a.line, "algebra " + a.name + " fails " + v.front().axiom + ": " + v.front().detail};
            }
        });
    for (const auto& m : spec.maps) guard(m.line, [&] { b.map(m.name, m.line); });
    for (const auto& j : spec.jobs) {
        if (!job_kinds().count(j.kind)) {
            errs.push_back({j.line, 1, "unknown job kind '" + j.kind + "'"});
            continue;
        }
        auto ref = [&](const char* key, auto&& exists, const char* what) {
            if (auto v = j.get(key); v && !exists(*v)) errs.push_back({j.line, 1, std::string("unresolved ") + what + " '" + *v + "'"});
        };
        ref("algebra", [&](const std::string& n) { return find_decl(spec.algebras, n) != nullptr; }, "algebra");
        ref("complex", [&](const std::string& n) { return find_decl(spec.complexes, n) != nullptr; }, "complex");
        ref("map", [&](const std::string& n) { return find_decl(spec.maps, n) != nullptr; }, "map");
    }
    std::stable_sort(errs.begin(), errs.end(), [](const SpecError& a, const SpecError& b) { return a.line < b.line; });
    return errs;
}

JobResult run_job(const SpecFile& spec, std::size_t index, const RunOptions& opt) {
    const JobDecl& job = spec.jobs.at(index);
    JobResult res;
    json& r = res.report;
    r["index"] = index;
    r["line"] = static_cast<int>(job.line);
    r["kind"] = job.kind;
    json params = json::object();
    for (const auto& [k, v] : job.params) params[k] = v;
    r["params"] = params;
    auto t0 = std::chrono::steady_clock::now();
    JobContext jc(spec, job, opt);
    std::string error;
    try {
        if (!job_kinds().count(job.kind)) throw JobError{"unknown job kind '" + job.kind + "'"};
        jc.str_or("mode", "exact");
        run_kind(jc, job.kind);
        jc.check_unused();
    } catch (const JobError& e) {
        error = e.msg;
    } catch (const BuildError& e) {
        error = "line " + std::to_string(e.line) + ": " + e.msg;
    } catch (const std::exception& e) {
        error = e.what();
    }
    for (auto& [k, v] : jc.out.items()) r[k] = v;
    r["assertions"] = jc.assertions;
    res.passed = error.empty() && jc.all_ok;
    r["status"] = !error.empty() ? "error" : (jc.all_ok ? "pass" : "fail");
    if (!error.empty()) r["error"] = job.kind + " (line " + std::to_string(job.line) + "): " + error;
    if (opt.timing) r["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.betti = jc.table;
    return res;
}

Report run_all(const SpecFile& spec, const RunOptions& opt, int threads) {
    Report rep;
    rep.jobs.resize(spec.jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < spec.jobs.size();) rep.jobs[k] = run_job(spec, k, opt);
    };
    int n = std::max(1, std::min<int>(threads, static_cast<int>(spec.jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    json& j = rep.json;
    j["field"] = Field::parse(opt.field.value_or(spec.field)).name();
    j["degree_cap"] = opt.degree_cap;
    j["arity_cap"] = opt.arity_cap;
    j["bar_cap"] = opt.bar_cap;
    json jobs = json::array();
    int passed = 0;
    for (const auto& r : rep.jobs) {
        jobs.push_back(r.report);
        passed += r.passed;
    }
    j["jobs"] = jobs;
    j["summary"] = {{"jobs", rep.jobs.size()}, {"passed", passed}, {"failed", rep.jobs.size() - passed}};
    rep.passed = passed == static_cast<int>(rep.jobs.size());
    return rep;
}

}  // namespace opcalc::cli
