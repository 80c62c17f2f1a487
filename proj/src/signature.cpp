#include "moncat/signature.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace moncat {

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& e : errors) os << e.what << '\n';
    return os.str();
}

SortId Polygraph::add_sort(const std::string& s) {
    sorts_.push_back(s);
    return static_cast<SortId>(sorts_.size()) - 1;
}

GenId Polygraph::add_gen(const std::string& n, Word arity, Word coarity) {
    gens_.push_back(Generator{n, std::move(arity), std::move(coarity)});
    return static_cast<GenId>(gens_.size()) - 1;
}

std::optional<SortId> Polygraph::sort(const std::string& s) const {
    for (SortId i = 0; i < sort_count(); ++i)
        if (sorts_[i] == s) return i;
    return std::nullopt;
}

std::optional<GenId> Polygraph::gen(const std::string& n) const {
    for (GenId i = 0; i < gen_count(); ++i)
        if (gens_[i].name == n) return i;
    return std::nullopt;
}

std::string Polygraph::word_name(const Word& w) const {
    std::string out;
    for (size_t i = 0; i < w.size(); ++i) {
        if (i) out += ' ';
        out += sorts_[w[i]];
    }
    return out;
}

void Polygraph::inject_structural() {
    if (doctrine == Doctrine::Free) return;
    auto have = [&](const std::string& n) { return gen(n).has_value(); };
    const int ns = sort_count();
    for (SortId a = 0; a < ns; ++a)
        for (SortId b = 0; b < ns; ++b) {
            std::string n = "swap[" + sorts_[a] + "," + sorts_[b] + "]";
            if (have(n)) continue;
            gens_.push_back(Generator{n, {a, b}, {b, a}, Structural::Swap, a, b});
        }
    auto one = [&](Structural k, const char* stem, SortId a, Word ar, Word co) {
        std::string n = std::string(stem) + "[" + sorts_[a] + "]";
        if (have(n)) return;
        gens_.push_back(Generator{n, std::move(ar), std::move(co), k, a, -1});
    };
    for (SortId a = 0; a < ns; ++a) {
        if (doctrine == Doctrine::Cartesian) {
            one(Structural::Copy, "copy", a, {a}, {a, a});
            one(Structural::Del, "del", a, {a}, {});
        } else {
            one(Structural::Mu, "mu", a, {a, a}, {a});
            one(Structural::Eta, "eta", a, {}, {a});
            one(Structural::Delta, "delta", a, {a}, {a, a});
            one(Structural::Eps, "eps", a, {a}, {});
        }
    }
}

GenId Polygraph::swap_gen(SortId a, SortId b) const {
    for (GenId g = 0; g < gen_count(); ++g)
        if (gens_[g].structural == Structural::Swap && gens_[g].s0 == a && gens_[g].s1 == b)
            return g;
    throw SignatureError("no swap generator for " + sorts_[a] + "," + sorts_[b]);
}

GenId Polygraph::structural_gen(Structural k, SortId a) const {
    for (GenId g = 0; g < gen_count(); ++g)
        if (gens_[g].structural == k && gens_[g].s0 == a) return g;
    throw SignatureError("missing structural generator on sort " + sorts_[a]);
}

ValidationReport Polygraph::validate() const {
    ValidationReport rep;
    for (size_t i = 0; i < sorts_.size(); ++i)
        for (size_t j = i + 1; j < sorts_.size(); ++j)
            if (sorts_[i] == sorts_[j])
                rep.errors.push_back({"duplicate sort name '" + sorts_[i] + "'"});
    for (size_t i = 0; i < gens_.size(); ++i)
        for (size_t j = i + 1; j < gens_.size(); ++j)
            if (gens_[i].name == gens_[j].name)
                rep.errors.push_back({"duplicate generator name '" + gens_[i].name + "'"});
    auto check_word = [&](const Word& w, const std::string& where) {
        for (SortId s : w)
            if (s < 0 || s >= sort_count())
                rep.errors.push_back({"undeclared sort in " + where});
    };
    for (const auto& g : gens_) {
        check_word(g.arity, "arity of '" + g.name + "'");
        check_word(g.coarity, "coarity of '" + g.name + "'");
    }
    return rep;
}

std::string compose_mismatch_message(const Polygraph& pg, const Word& cod, const Word& dom) {
    return "interface mismatch: '" + pg.word_name(cod) + "' vs '" + pg.word_name(dom) + "'";
}

Word PolygraphMorphism::map_word(const Word& w) const {
    Word out;
    out.reserve(w.size());
    for (SortId s : w) out.push_back(sort_map.at(s));
    return out;
}

ValidationReport PolygraphMorphism::validate() const {
    ValidationReport rep;
    if (!source || !target) {
        rep.errors.push_back({"morphism missing source or target"});
        return rep;
    }
    if (static_cast<int>(sort_map.size()) != source->sort_count())
        rep.errors.push_back({"sort map arity mismatch"});
    if (static_cast<int>(gen_map.size()) != source->gen_count())
        rep.errors.push_back({"generator map arity mismatch"});
    if (!rep.ok()) return rep;
    for (SortId s = 0; s < source->sort_count(); ++s)
        if (sort_map[s] < 0 || sort_map[s] >= target->sort_count())
            rep.errors.push_back({"sort map out of range at '" + source->sort_name(s) + "'"});
    if (!rep.ok()) return rep;
    for (GenId g = 0; g < source->gen_count(); ++g) {
        const auto& src = source->generator(g);
        if (gen_map[g] < 0 || gen_map[g] >= target->gen_count()) {
            rep.errors.push_back({"generator map out of range at '" + src.name + "'"});
            continue;
        }
        const auto& dst = target->generator(gen_map[g]);
        if (map_word(src.arity) != dst.arity || map_word(src.coarity) != dst.coarity)
            rep.errors.push_back({"morphism does not preserve the interface of '" + src.name + "'"});
    }
    return rep;
}

PolygraphMorphism identity_morphism(const PolygraphPtr& pg) {
    PolygraphMorphism m;
    m.source = pg;
    m.target = pg;
    m.sort_map.resize(pg->sort_count());
    std::iota(m.sort_map.begin(), m.sort_map.end(), 0);
    m.gen_map.resize(pg->gen_count());
    std::iota(m.gen_map.begin(), m.gen_map.end(), 0);
    return m;
}

PolygraphMorphism compose(const PolygraphMorphism& f, const PolygraphMorphism& g) {
    if (f.target != g.source) throw SignatureError("morphism composition target/source mismatch");
    PolygraphMorphism m;
    m.source = f.source;
    m.target = g.target;
    for (SortId s : f.sort_map) m.sort_map.push_back(g.sort_map.at(s));
    for (GenId x : f.gen_map) m.gen_map.push_back(g.gen_map.at(x));
    return m;
}

bool morphism_equal(const PolygraphMorphism& f, const PolygraphMorphism& g) {
    return f.source == g.source && f.target == g.target && f.sort_map == g.sort_map &&
           f.gen_map == g.gen_map;
}

SortId Multigraph::add_sort(const std::string& s) {
    sorts_.push_back(s);
    return static_cast<SortId>(sorts_.size()) - 1;
}

OpId Multigraph::add_op(const std::string& n, Word inputs, SortId output) {
    ops_.push_back(Operation{n, std::move(inputs), output});
    return static_cast<OpId>(ops_.size()) - 1;
}

std::optional<SortId> Multigraph::sort(const std::string& s) const {
    for (SortId i = 0; i < sort_count(); ++i)
        if (sorts_[i] == s) return i;
    return std::nullopt;
}

std::optional<OpId> Multigraph::op(const std::string& n) const {
    for (OpId i = 0; i < op_count(); ++i)
        if (ops_[i].name == n) return i;
    return std::nullopt;
}

ValidationReport Multigraph::validate() const {
    ValidationReport rep;
    for (size_t i = 0; i < ops_.size(); ++i)
        for (size_t j = i + 1; j < ops_.size(); ++j)
            if (ops_[i].name == ops_[j].name)
                rep.errors.push_back({"duplicate operation name '" + ops_[i].name + "'"});
    for (const auto& o : ops_) {
        for (SortId s : o.inputs)
            if (s < 0 || s >= sort_count())
                rep.errors.push_back({"undeclared sort in inputs of '" + o.name + "'"});
        if (o.output < 0 || o.output >= sort_count())
            rep.errors.push_back({"undeclared output sort of '" + o.name + "'"});
    }
    return rep;
}

ValidationReport MultigraphMorphism::validate() const {
    ValidationReport rep;
    if (!source || !target) {
        rep.errors.push_back({"morphism missing source or target"});
        return rep;
    }
    for (OpId o = 0; o < source->op_count(); ++o) {
        const auto& src = source->operation(o);
        const auto& dst = target->operation(op_map.at(o));
        Word mapped;
        for (SortId s : src.inputs) mapped.push_back(sort_map.at(s));
        if (mapped != dst.inputs || sort_map.at(src.output) != dst.output)
            rep.errors.push_back({"morphism does not preserve the interface of '" + src.name + "'"});
    }
    return rep;
}

Permutation identity_permutation(int n) {
    Permutation p(n);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

Permutation compose(const Permutation& sigma, const Permutation& tau) {
    // apply tau after sigma as reindexings: (sigma o tau)[i] = sigma[tau[i]]
    Permutation out(tau.size());
    for (size_t i = 0; i < tau.size(); ++i) out[i] = sigma[tau[i]];
    return out;
}

Permutation inverse(const Permutation& p) {
    Permutation out(p.size());
    for (size_t i = 0; i < p.size(); ++i) out[p[i]] = static_cast<int>(i);
    return out;
}

std::vector<Permutation> all_permutations(int n) {
    Permutation p = identity_permutation(n);
    std::vector<Permutation> out;
    do {
        out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

Word SymmetricMultigraph::inputs_of(const SymElement& e) const {
    const Word& base = base_.operation(e.op).inputs;
    Word out;
    out.reserve(base.size());
    for (int i : e.perm) out.push_back(base[i]);
    return out;
}

SymElement SymmetricMultigraph::act(const Permutation& sigma, const SymElement& e) const {
    if (sigma.size() != e.perm.size())
        throw SignatureError("permutation size mismatch in symmetric action");
    return SymElement{e.op, compose(e.perm, sigma)};
}

std::vector<SymElement> SymmetricMultigraph::orbit(OpId op) const {
    const int n = static_cast<int>(base_.operation(op).inputs.size());
    if (n > 6) throw SignatureError("orbit materialization limited to arity <= 6");
    std::vector<SymElement> out;
    for (auto& p : all_permutations(n)) out.push_back(SymElement{op, p});
    return out;
}

ValidationReport validate_polygraph(const Polygraph& p) { return p.validate(); }

SymmetricMultigraph clique(const Multigraph& m) { return SymmetricMultigraph(m); }

Multigraph representative(const SymmetricMultigraph& s) { return s.base(); }

}  // namespace moncat
