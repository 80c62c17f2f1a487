#include "moncat/diagram.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace moncat {

bool box_same_shape(const Box& a, const Box& b) {
    if (a.is_hole() != b.is_hole()) return false;
    if (!a.is_hole()) return a.gen == b.gen;
    return a.hole_dom == b.hole_dom && a.hole_cod == b.hole_cod;
}

bool box_shape_less(const Box& a, const Box& b) {
    if (a.is_hole() != b.is_hole()) return !a.is_hole();  // generators before holes
    if (!a.is_hole()) return a.gen < b.gen;
    if (a.hole_dom != b.hole_dom) return a.hole_dom < b.hole_dom;
    return a.hole_cod < b.hole_cod;
}

int Diagram::in_width(const Box& b) const {
    return b.is_hole() ? static_cast<int>(b.hole_dom.size())
                       : static_cast<int>(pg_->generator(b.gen).arity.size());
}

int Diagram::out_width(const Box& b) const {
    return b.is_hole() ? static_cast<int>(b.hole_cod.size())
                       : static_cast<int>(pg_->generator(b.gen).coarity.size());
}

namespace {
const Word& box_arity(const Polygraph& pg, const Box& b) {
    return b.is_hole() ? b.hole_dom : pg.generator(b.gen).arity;
}
const Word& box_coarity(const Polygraph& pg, const Box& b) {
    return b.is_hole() ? b.hole_cod : pg.generator(b.gen).coarity;
}
}  // namespace

void Diagram::refresh() {
    Word frontier = dom_;
    for (SortId s : dom_)
        if (s < 0 || s >= pg_->sort_count()) throw DiagramError("undeclared sort in domain");
    for (auto& sl : slices_) {
        if (!sl.box.is_hole() && (sl.box.gen < 0 || sl.box.gen >= pg_->gen_count()))
            throw DiagramError("unknown generator in slice");
        const Word& in = box_arity(*pg_, sl.box);
        const Word& out = box_coarity(*pg_, sl.box);
        const int w = static_cast<int>(frontier.size());
        if (sl.left_pad < 0 || sl.left_pad + static_cast<int>(in.size()) > w)
            throw DiagramError("slice window out of range");
        for (size_t i = 0; i < in.size(); ++i)
            if (frontier[sl.left_pad + i] != in[i])
                throw DiagramError(
                    "slice input sorts do not match frontier: expected '" + pg_->word_name(in) +
                    "' against '" + pg_->word_name(frontier) + "'");
        sl.right_pad = w - sl.left_pad - static_cast<int>(in.size());
        Word next(frontier.begin(), frontier.begin() + sl.left_pad);
        next.insert(next.end(), out.begin(), out.end());
        next.insert(next.end(), frontier.begin() + sl.left_pad + in.size(), frontier.end());
        frontier = std::move(next);
    }
    cod_ = frontier;
}

Diagram::Diagram(PolygraphPtr pg, Word dom, std::vector<Slice> slices)
    : pg_(std::move(pg)), dom_(std::move(dom)), slices_(std::move(slices)) {
    refresh();
}

Diagram Diagram::identity(PolygraphPtr pg, Word w) { return Diagram(std::move(pg), std::move(w), {}); }

Diagram Diagram::of_generator(PolygraphPtr pg, GenId g) {
    if (g < 0 || g >= pg->gen_count()) throw DiagramError("unknown generator");
    Word dom = pg->generator(g).arity;
    return Diagram(std::move(pg), std::move(dom), {Slice{0, Box::generator(g), 0}});
}

Diagram Diagram::of_hole(PolygraphPtr pg, Word dom, Word cod, std::string label) {
    Word d = dom;
    return Diagram(std::move(pg), std::move(d),
                   {Slice{0, Box::hole(std::move(dom), std::move(cod), std::move(label)), 0}});
}

int Diagram::gen_count() const {
    int n = 0;
    for (const auto& s : slices_)
        if (!s.box.is_hole()) ++n;
    return n;
}

int Diagram::hole_count() const { return static_cast<int>(slices_.size()) - gen_count(); }

std::vector<int> Diagram::hole_slices() const {
    std::vector<int> out;
    for (size_t i = 0; i < slices_.size(); ++i)
        if (slices_[i].box.is_hole()) out.push_back(static_cast<int>(i));
    return out;
}

Word Diagram::frontier(int t) const {
    Word w = dom_;
    for (int i = 0; i < t; ++i) {
        const auto& sl = slices_[i];
        const Word& in = box_arity(*pg_, sl.box);
        const Word& out = box_coarity(*pg_, sl.box);
        Word next(w.begin(), w.begin() + sl.left_pad);
        next.insert(next.end(), out.begin(), out.end());
        next.insert(next.end(), w.begin() + sl.left_pad + in.size(), w.end());
        w = std::move(next);
    }
    return w;
}

namespace {

struct MoveTrace {
    int pad = -1;       // left pad the slice would have at the target position
    bool ok = false;
};

// Pad evolution of slices[from], walked backwards to sit at position downto.
// Blocked when its window meets an intermediate slice's output block.
MoveTrace bubble_pad(const Polygraph& pg, const std::vector<Slice>& slices, int from, int downto) {
    MoveTrace tr;
    int b = slices[from].left_pad;
    const int r = static_cast<int>(box_arity(pg, slices[from].box).size());
    for (int k = from - 1; k >= downto; --k) {
        const auto& u = slices[k];
        const int a = u.left_pad;
        const int p = static_cast<int>(box_arity(pg, u.box).size());
        const int q = static_cast<int>(box_coarity(pg, u.box).size());
        if (b + r <= a) {
            // window entirely above u's output block
        } else if (b >= a + q) {
            b += p - q;
        } else {
            return tr;
        }
    }
    tr.pad = b;
    tr.ok = true;
    return tr;
}

// Swap slices[k] and slices[k+1]; caller guarantees the supports admit it.
void do_swap(const Polygraph& pg, std::vector<Slice>& slices, int k) {
    Slice u = slices[k];
    Slice v = slices[k + 1];
    const int a = u.left_pad;
    const int p = static_cast<int>(box_arity(pg, u.box).size());
    const int q = static_cast<int>(box_coarity(pg, u.box).size());
    const int b = v.left_pad;
    const int r = static_cast<int>(box_arity(pg, v.box).size());
    const int s = static_cast<int>(box_coarity(pg, v.box).size());
    if (b + r <= a) {
        u.left_pad = a + s - r;
    } else if (b >= a + q) {
        v.left_pad = b + p - q;
    } else {
        throw DiagramError("interchange on overlapping supports");
    }
    slices[k] = v;
    slices[k + 1] = u;
}

}  // namespace

std::optional<Diagram> Diagram::try_swap(int k) const {
    if (k < 0 || k + 1 >= static_cast<int>(slices_.size())) return std::nullopt;
    auto tr = bubble_pad(*pg_, slices_, k + 1, k);
    if (!tr.ok) return std::nullopt;
    std::vector<Slice> out = slices_;
    do_swap(*pg_, out, k);
    return Diagram(pg_, dom_, std::move(out));
}

namespace {

// Occurrence/wire view of a slice list. Wire ids are creation-ordered:
// domain wires first, then producer outputs in run order.
struct Run {
    struct Occ {
        Box box;
        std::vector<int> in, out;
    };
    std::vector<Occ> occ;
    std::vector<int> producer;       // wire -> occ (-1 for domain)
    std::vector<int> producer_port;  // index among the producer's outputs
    std::vector<int> consumer;       // wire -> occ (-1 for codomain)
    std::vector<int> consumer_port;
    std::vector<int> dom_wires, cod_wires;
    std::vector<std::vector<int>> frontiers;  // wire ids before each slice, size T+1
};

Run build_run(const Polygraph& pg, const Word& dom, const std::vector<Slice>& slices) {
    Run r;
    std::vector<int> frontier;
    for (size_t i = 0; i < dom.size(); ++i) {
        r.producer.push_back(-1);
        r.producer_port.push_back(static_cast<int>(i));
        r.consumer.push_back(-1);
        r.consumer_port.push_back(-1);
        r.dom_wires.push_back(static_cast<int>(i));
        frontier.push_back(static_cast<int>(i));
    }
    r.frontiers.push_back(frontier);
    for (const auto& sl : slices) {
        const int a = static_cast<int>(box_arity(pg, sl.box).size());
        const int c = static_cast<int>(box_coarity(pg, sl.box).size());
        Run::Occ o;
        o.box = sl.box;
        for (int i = 0; i < a; ++i) {
            int w = frontier[sl.left_pad + i];
            o.in.push_back(w);
            r.consumer[w] = static_cast<int>(r.occ.size());
            r.consumer_port[w] = i;
        }
        std::vector<int> fresh;
        for (int i = 0; i < c; ++i) {
            int w = static_cast<int>(r.producer.size());
            r.producer.push_back(static_cast<int>(r.occ.size()));
            r.producer_port.push_back(i);
            r.consumer.push_back(-1);
            r.consumer_port.push_back(-1);
            o.out.push_back(w);
            fresh.push_back(w);
        }
        frontier.erase(frontier.begin() + sl.left_pad, frontier.begin() + sl.left_pad + a);
        frontier.insert(frontier.begin() + sl.left_pad, fresh.begin(), fresh.end());
        r.occ.push_back(std::move(o));
        r.frontiers.push_back(frontier);
    }
    r.cod_wires = frontier;
    return r;
}

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) {
        for (int i = 0; i < n; ++i) p[i] = i;
    }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void join(int a, int b) { p[find(a)] = find(b); }
};

// Canonical emission order for a subset of occurrences: (occ, pad) pairs.
using Emission = std::vector<std::pair<int, int>>;

// Replay an emission against start wires; yields frontiers of wire ids.
std::vector<std::vector<int>> replay(const Run& run, const std::vector<int>& start, const Emission& em) {
    std::vector<std::vector<int>> out;
    std::vector<int> frontier = start;
    out.push_back(frontier);
    for (auto& [o, pad] : em) {
        frontier.erase(frontier.begin() + pad, frontier.begin() + pad + run.occ[o].in.size());
        frontier.insert(frontier.begin() + pad, run.occ[o].out.begin(), run.occ[o].out.end());
        out.push_back(frontier);
    }
    return out;
}

// Invariant partial order on wires: above[u][v] when u provably lies above v
// in every planar embedding. Base facts come from port and boundary
// adjacency; box rules propagate across occurrences; then transitive closure.
std::vector<std::vector<char>> wire_order(const Run& run, const std::vector<char>& keep,
                                          const std::vector<int>& dom, const std::vector<int>& cod) {
    const int W = static_cast<int>(run.producer.size());
    std::vector<std::vector<char>> above(W, std::vector<char>(W, 0));
    auto add = [&](int u, int v) { above[u][v] = 1; };
    for (size_t j = 0; j + 1 < dom.size(); ++j) add(dom[j], dom[j + 1]);
    for (size_t j = 0; j + 1 < cod.size(); ++j) add(cod[j], cod[j + 1]);
    for (size_t o = 0; o < run.occ.size(); ++o) {
        if (!keep[o]) continue;
        const auto& oc = run.occ[o];
        for (size_t j = 0; j + 1 < oc.in.size(); ++j) add(oc.in[j], oc.in[j + 1]);
        for (size_t j = 0; j + 1 < oc.out.size(); ++j) add(oc.out[j], oc.out[j + 1]);
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (int u = 0; u < W; ++u)
            for (int v = 0; v < W; ++v) {
                if (!above[u][v]) continue;
                for (int w = 0; w < W; ++w)
                    if (above[v][w] && !above[u][w]) {
                        above[u][w] = 1;
                        changed = true;
                    }
            }
        // a wire strictly above a box's top port is above the whole box,
        // and dually below its bottom port
        for (size_t o = 0; o < run.occ.size(); ++o) {
            if (!keep[o]) continue;
            const auto& oc = run.occ[o];
            if (oc.in.empty() || oc.out.empty()) continue;
            int itop = oc.in.front(), otop = oc.out.front();
            int ibot = oc.in.back(), obot = oc.out.back();
            for (int x = 0; x < W; ++x) {
                if (above[x][itop] && !above[x][otop]) { above[x][otop] = 1; changed = true; }
                if (above[x][otop] && x != itop && !above[x][itop] && run.consumer[x] != static_cast<int>(o)) {
                    above[x][itop] = 1;
                    changed = true;
                }
                if (above[ibot][x] && !above[obot][x]) { above[obot][x] = 1; changed = true; }
                if (above[obot][x] && x != ibot && !above[ibot][x] && run.consumer[x] != static_cast<int>(o)) {
                    above[ibot][x] = 1;
                    changed = true;
                }
            }
        }
    }
    return above;
}

bool emission_shape_less(const Run& run, const Emission& a, const Emission& b) {
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (a[i].second != b[i].second) return a[i].second < b[i].second;
        const Box& ba = run.occ[a[i].first].box;
        const Box& bb = run.occ[b[i].first].box;
        if (!box_same_shape(ba, bb)) return box_shape_less(ba, bb);
    }
    return a.size() < b.size();
}

// Deterministic backtracking schedule over a subset of occurrences. Ready
// windows and demanded arity-0 blocks form the candidate pool; candidates are
// explored in (pad, box shape) order and the first completed schedule wins.
// The pool and its order are functions of the abstract state alone, so the
// result does not depend on the input slice order.
class Scheduler {
public:
    Scheduler(const Run& run, const std::vector<char>& keep, std::vector<int> start_wires,
              std::vector<int> cod_wires)
        : run_(run), keep_(keep), start_(std::move(start_wires)), cod_(std::move(cod_wires)),
          above_(wire_order(run, keep, start_, cod_)) {}

    std::optional<Emission> solve() {
        frontier_ = start_;
        emitted_.assign(run_.occ.size(), 0);
        int remaining = 0;
        for (size_t o = 0; o < run_.occ.size(); ++o)
            if (keep_[o]) ++remaining;
        return best(remaining);
    }

private:
    const Run& run_;
    const std::vector<char>& keep_;
    std::vector<int> start_;
    std::vector<int> cod_;
    std::vector<std::vector<char>> above_;
    std::vector<int> frontier_;
    std::vector<char> emitted_;
    std::map<std::pair<std::vector<char>, std::vector<int>>, std::optional<Emission>> memo_;

    int pos_of(int wire) const {
        for (size_t i = 0; i < frontier_.size(); ++i)
            if (frontier_[i] == wire) return static_cast<int>(i);
        return -1;
    }

    // order-respecting pad interval for a block of fresh wires
    std::pair<int, int> block_bounds(const std::vector<int>& block) const {
        int lo = 0, hi = static_cast<int>(frontier_.size());
        for (int q = 0; q < static_cast<int>(frontier_.size()); ++q) {
            bool must_above = false, must_below = false;
            for (int x : block) {
                if (above_[frontier_[q]][x]) must_above = true;
                if (above_[x][frontier_[q]]) must_below = true;
            }
            if (must_above) lo = std::max(lo, q + 1);
            if (must_below) hi = std::min(hi, q);
        }
        return {lo, hi};
    }

    // all arity-0 leaves reachable from a missing wire through unemitted
    // producers with no present inputs
    void chain_leaves(int wire, std::set<int>& leaves) const {
        int p = run_.producer[wire];
        if (p < 0 || emitted_[p] || !keep_[p]) return;
        if (run_.occ[p].in.empty()) {
            leaves.insert(p);
            return;
        }
        for (int w : run_.occ[p].in)
            if (pos_of(w) >= 0) return;  // handled as a consumer in its own right
        for (int w : run_.occ[p].in) chain_leaves(w, leaves);
    }

    std::vector<std::pair<int, int>> candidates() const {
        std::vector<std::pair<int, int>> out;
        std::set<int> leaves;
        bool any_ready = false;
        for (size_t o = 0; o < run_.occ.size(); ++o) {
            if (!keep_[o] || emitted_[o]) continue;
            const auto& in = run_.occ[o].in;
            if (in.empty()) continue;
            int k = pos_of(in[0]);
            bool whole = k >= 0;
            if (whole)
                for (size_t m = 1; m < in.size(); ++m)
                    if (k + static_cast<int>(m) >= static_cast<int>(frontier_.size()) ||
                        frontier_[k + m] != in[m]) {
                        whole = false;
                        break;
                    }
            if (whole) {
                // outputs must also respect the wire order against what the
                // frontier will hold once the window is consumed
                std::vector<int> rest = frontier_;
                rest.erase(rest.begin() + k, rest.begin() + k + in.size());
                int lo = 0, hi = static_cast<int>(rest.size());
                for (int q = 0; q < static_cast<int>(rest.size()); ++q) {
                    bool must_above = false, must_below = false;
                    for (int x : run_.occ[o].out) {
                        if (above_[rest[q]][x]) must_above = true;
                        if (above_[x][rest[q]]) must_below = true;
                    }
                    if (must_above) lo = std::max(lo, q + 1);
                    if (must_below) hi = std::min(hi, q);
                }
                if (k < lo || k > hi) continue;
                out.push_back({static_cast<int>(o), k});
                any_ready = true;
                continue;
            }
            bool some_present = false;
            for (int w : in)
                if (pos_of(w) >= 0) {
                    some_present = true;
                    break;
                }
            if (!some_present) continue;
            for (int w : in)
                if (pos_of(w) < 0) chain_leaves(w, leaves);
        }
        for (size_t j = 0; j < cod_.size(); ++j) {
            int w = cod_[j];
            if (pos_of(w) >= 0) continue;
            chain_leaves(w, leaves);
        }
        if (leaves.empty() && !any_ready) {
            // isolated closed parts: any remaining arity-0 occurrence may seed
            for (size_t o = 0; o < run_.occ.size(); ++o)
                if (keep_[o] && !emitted_[o] && run_.occ[o].in.empty()) leaves.insert(static_cast<int>(o));
        }
        // a block whose wires must enclose a demanded block has to fire first
        bool grew = true;
        while (grew) {
            grew = false;
            for (size_t q = 0; q < run_.occ.size(); ++q) {
                if (!keep_[q] || emitted_[q] || !run_.occ[q].in.empty()) continue;
                if (leaves.count(static_cast<int>(q))) continue;
                const auto& qo = run_.occ[q].out;
                if (qo.empty()) continue;
                for (int p : leaves) {
                    const auto& po = run_.occ[p].out;
                    if (po.empty()) continue;
                    if (above_[qo.front()][po.front()] && above_[po.back()][qo.back()]) {
                        leaves.insert(static_cast<int>(q));
                        grew = true;
                        break;
                    }
                }
                if (grew) break;
            }
        }
        for (int p : leaves) {
            auto [lo, hi] = block_bounds(run_.occ[p].out);
            for (int pad = lo; pad <= hi; ++pad) out.push_back({p, pad});
        }
        std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            const Box& ba = run_.occ[a.first].box;
            const Box& bb = run_.occ[b.first].box;
            if (!box_same_shape(ba, bb)) return box_shape_less(ba, bb);
            return a.first < b.first;
        });
        return out;
    }

    // box shape as a comparable token, blind to occurrence identity
    std::vector<int> shape_token(const Box& b) const {
        std::vector<int> t;
        if (b.is_hole()) {
            t.push_back(1);
            for (SortId s : b.hole_dom) t.push_back(s);
            t.push_back(-1);
            for (SortId s : b.hole_cod) t.push_back(s);
        } else {
            t.push_back(0);
            t.push_back(b.gen);
        }
        return t;
    }

    std::vector<std::vector<int>> shape_sequence(const Emission& em) const {
        std::vector<std::vector<int>> seq;
        for (auto& [o, pad] : em) {
            auto t = shape_token(run_.occ[o].box);
            t.insert(t.begin(), pad);
            seq.push_back(std::move(t));
        }
        return seq;
    }

    // Lexicographically minimal completion by (pad, shape) sequence. Only
    // candidates tied on (pad, shape) force exploration of both branches.
    std::optional<Emission> best(int remaining) {
        if (remaining == 0) return Emission{};
        auto state = std::make_pair(emitted_, frontier_);
        auto it = memo_.find(state);
        if (it != memo_.end()) return it->second;
        auto cands = candidates();
        std::optional<Emission> result;
        size_t i = 0;
        while (i < cands.size() && !result) {
            size_t j = i;
            auto tok = shape_token(run_.occ[cands[i].first].box);
            while (j < cands.size() && cands[j].second == cands[i].second &&
                   shape_token(run_.occ[cands[j].first].box) == tok)
                ++j;
            std::optional<Emission> group_best;
            std::optional<std::vector<std::vector<int>>> group_key;
            for (size_t c = i; c < j; ++c) {
                auto [o, pad] = cands[c];
                const auto& oc = run_.occ[o];
                std::vector<int> saved = frontier_;
                frontier_.erase(frontier_.begin() + pad, frontier_.begin() + pad + oc.in.size());
                frontier_.insert(frontier_.begin() + pad, oc.out.begin(), oc.out.end());
                emitted_[o] = 1;
                auto suffix = best(remaining - 1);
                emitted_[o] = 0;
                frontier_ = std::move(saved);
                if (!suffix) continue;
                Emission full;
                full.push_back({o, pad});
                full.insert(full.end(), suffix->begin(), suffix->end());
                auto key = shape_sequence(full);
                if (!group_best || key < *group_key) {
                    group_best = std::move(full);
                    group_key = std::move(key);
                }
            }
            if (group_best) result = std::move(group_best);
            i = j;
        }
        memo_[std::move(state)] = result;
        return result;
    }
};

Emission schedule_anchored(const Run& run, const std::vector<char>& keep, const std::vector<int>& dom_wires,
                           const std::vector<int>& cod_wires) {
    Scheduler s(run, keep, dom_wires, cod_wires);
    auto em = s.solve();
    if (!em) throw DiagramError("canonical scheduling found no valid order");
    return *em;
}

Emission schedule_closed(const Run& run, const std::vector<char>& keep) {
    Scheduler s(run, keep, {}, {});
    auto em = s.solve();
    if (!em) throw DiagramError("closed component has no valid schedule");
    return *em;
}

// Planar region complex over gap slots (t, i): gap i of the frontier before
// step t. Slots in one face are joined when the region between adjacent wires
// flows across the step.
struct GapComplex {
    std::vector<int> offset;
    UnionFind uf;
    GapComplex(const Run& run, const std::vector<std::vector<int>>& frontiers, const Emission& em) : uf(0) {
        int total = 0;
        for (const auto& f : frontiers) {
            offset.push_back(total);
            total += static_cast<int>(f.size()) + 1;
        }
        uf = UnionFind(total);
        for (size_t t = 0; t < em.size(); ++t) {
            const int p = em[t].second;
            const int a = static_cast<int>(run.occ[em[t].first].in.size());
            const int c = static_cast<int>(run.occ[em[t].first].out.size());
            const int w = static_cast<int>(frontiers[t].size());
            for (int i = 0; i <= p; ++i) uf.join(slot(static_cast<int>(t), i), slot(static_cast<int>(t) + 1, i));
            for (int i = p + a; i <= w; ++i)
                uf.join(slot(static_cast<int>(t), i), slot(static_cast<int>(t) + 1, i - a + c));
        }
    }
    int slot(int t, int i) const { return offset[t] + i; }
    int face(int t, int i) { return uf.find(slot(t, i)); }

    // (wire, side) adjacency per face; side 1 = wire above the gap.
    std::map<int, std::set<std::pair<int, int>>> adjacency(const std::vector<std::vector<int>>& frontiers) {
        std::map<int, std::set<std::pair<int, int>>> adj;
        for (size_t t = 0; t < frontiers.size(); ++t) {
            const auto& fr = frontiers[t];
            for (int i = 0; i <= static_cast<int>(fr.size()); ++i) {
                auto& s = adj[face(static_cast<int>(t), i)];
                if (i > 0) s.insert({fr[i - 1], 1});
                if (i < static_cast<int>(fr.size())) s.insert({fr[i], 0});
            }
        }
        return adj;
    }
};

}  // namespace

Diagram Diagram::canonical() const {
    if (slices_.empty()) return *this;
    Run run = build_run(*pg_, dom_, slices_);
    const int n = static_cast<int>(run.occ.size());

    UnionFind comps(n);
    for (size_t w = 0; w < run.producer.size(); ++w)
        if (run.producer[w] >= 0 && run.consumer[w] >= 0) comps.join(run.producer[w], run.consumer[w]);
    std::vector<char> anchored_comp(n, 0);
    for (size_t w = 0; w < run.producer.size(); ++w)
        if (run.producer[w] < 0 || run.consumer[w] < 0) {
            if (run.producer[w] >= 0) anchored_comp[comps.find(run.producer[w])] = 1;
            if (run.consumer[w] >= 0) anchored_comp[comps.find(run.consumer[w])] = 1;
        }
    std::vector<char> anchored(n, 0);
    std::map<int, std::vector<int>> closed;
    for (int o = 0; o < n; ++o) {
        if (anchored_comp[comps.find(o)])
            anchored[o] = 1;
        else
            closed[comps.find(o)].push_back(o);
    }

    Emission skel = schedule_anchored(run, anchored, run.dom_wires, run.cod_wires);

    struct Comp {
        std::vector<int> occs;
        std::vector<char> keep;
        int first_slice;
        Emission em;  // canonical, descendants folded in
        int parent = -1;
        std::vector<int> children;
        std::string key;
    };
    std::vector<Comp> cs;
    for (auto& [root, occs] : closed) {
        (void)root;
        Comp c;
        c.occs = occs;
        c.keep.assign(n, 0);
        for (int o : occs) c.keep[o] = 1;
        c.first_slice = occs.front();
        c.em = schedule_closed(run, c.keep);
        cs.push_back(std::move(c));
    }
    const int k = static_cast<int>(cs.size());

    // nesting: component i is inside component j when i's position, rebased
    // onto j's wires alone, falls in a non-outer face of j's own arrangement
    std::vector<std::vector<char>> inside(k, std::vector<char>(k, 0));
    for (int i = 0; i < k; ++i) {
        int t = cs[i].first_slice;
        int p = slices_[t].left_pad;
        const auto& fr = run.frontiers[t];
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            // j-only projection of the original order
            Emission jem;
            for (int s = 0; s < n; ++s) {
                if (!cs[j].keep[s]) continue;
                int pad = 0;
                const auto& sfr = run.frontiers[s];
                for (int q = 0; q < slices_[s].left_pad; ++q) {
                    int owner = run.producer[sfr[q]];
                    if (owner >= 0 && cs[j].keep[owner]) ++pad;
                }
                jem.push_back({s, pad});
            }
            int jt = 0;
            for (auto& [s, pad] : jem)
                if (s < t) ++jt;
            int jp = 0;
            for (int q = 0; q < p; ++q) {
                int owner = run.producer[fr[q]];
                if (owner >= 0 && cs[j].keep[owner]) ++jp;
            }
            auto jfront = replay(run, {}, jem);
            GapComplex jgc(run, jfront, jem);
            inside[i][j] = jgc.face(jt, jp) != jgc.face(0, 0);
        }
    }
    for (int i = 0; i < k; ++i) {
        int parent = -1;
        for (int j = 0; j < k; ++j) {
            if (!inside[i][j]) continue;
            if (parent < 0 || inside[j][parent]) parent = j;
        }
        cs[i].parent = parent;
        if (parent >= 0) cs[parent].children.push_back(i);
    }

    // Rebased reference slot of comp ch within the host occurrence set: walk
    // the original run, counting host slices and host wires above.
    auto ref_slot = [&](const std::vector<char>& host_occ, bool with_domain, int ref_slice) -> std::pair<int, int> {
        int t = 0;
        for (int s = 0; s < ref_slice; ++s)
            if (host_occ[s]) ++t;
        int pad = 0;
        const auto& fr = run.frontiers[ref_slice];
        for (int q = 0; q < slices_[ref_slice].left_pad; ++q) {
            int owner = run.producer[fr[q]];
            if (owner < 0 ? with_domain : host_occ[owner]) ++pad;
        }
        return {t, pad};
    };

    // Projection of the original run onto the host set, as an emission.
    auto project_emission = [&](const std::vector<char>& host_occ, bool with_domain) -> std::pair<Emission, std::vector<int>> {
        Emission em;
        std::vector<int> start;
        if (with_domain)
            for (int w : run.dom_wires) start.push_back(w);
        for (int s = 0; s < n; ++s) {
            if (!host_occ[s]) continue;
            int pad = 0;
            const auto& fr = run.frontiers[s];
            for (int q = 0; q < slices_[s].left_pad; ++q) {
                int owner = run.producer[fr[q]];
                if (owner < 0 ? with_domain : host_occ[owner]) ++pad;
            }
            em.push_back({s, pad});
        }
        return {em, start};
    };

    // Insertion slot of a component into a host emission: match the enclosing
    // face between the original-order projection and the canonical host, then
    // take the earliest, topmost slot of that face.
    auto insertion_slot = [&](const Emission& host_em, const std::vector<int>& host_start,
                              const std::vector<char>& host_occ, int ref_slice) -> std::pair<int, int> {
        const bool with_domain = !host_start.empty() || host_occ == anchored;
        auto [ref_em, ref_start] = project_emission(host_occ, with_domain);
        auto ref_frontiers = replay(run, ref_start, ref_em);
        GapComplex ref_gc(run, ref_frontiers, ref_em);
        auto [rt, rp] = ref_slot(host_occ, with_domain, ref_slice);
        int want = ref_gc.face(rt, rp);
        auto ref_adj = ref_gc.adjacency(ref_frontiers);

        auto host_frontiers = replay(run, host_start, host_em);
        GapComplex host_gc(run, host_frontiers, host_em);
        auto host_adj = host_gc.adjacency(host_frontiers);
        int target = -1;
        for (auto& [f, adj] : host_adj)
            if (adj == ref_adj[want]) {
                if (target >= 0) throw DiagramError("ambiguous face match in canonicalization");
                target = f;
            }
        if (target < 0) throw DiagramError("face match failed in canonicalization");
        for (int t = 0; t <= static_cast<int>(host_em.size()); ++t)
            for (int i = 0; i <= static_cast<int>(host_frontiers[t].size()); ++i)
                if (host_gc.face(t, i) == target) return {t, i};
        throw DiagramError("face slot not found");
    };

    auto comp_key = [&](const Emission& em) {
        std::ostringstream os;
        for (auto& [o, pad] : em) {
            os << pad << ':';
            const Box& b = run.occ[o].box;
            if (b.is_hole()) {
                os << 'h';
                for (SortId s : b.hole_dom) os << s << ',';
                os << '>';
                for (SortId s : b.hole_cod) os << s << ',';
            } else {
                os << 'g' << b.gen;
            }
            os << ';';
        }
        return os.str();
    };

    // fold children into parents, deepest first
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::function<int(int)> depth = [&](int i) { return cs[i].parent < 0 ? 0 : 1 + depth(cs[i].parent); };
    std::sort(order.begin(), order.end(), [&](int a, int b) { return depth(a) > depth(b); });
    for (int i : order) {
        // compute all child slots against the clean parent emission first
        std::vector<std::tuple<int, int, int>> placed;  // (slot t, slot gap, child)
        for (int ch : cs[i].children) {
            auto [t, g] = insertion_slot(cs[i].em, {}, cs[i].keep, cs[ch].first_slice);
            placed.push_back({t, g, ch});
        }
        std::sort(placed.begin(), placed.end(), [&](const auto& a, const auto& b) {
            auto& [ta, ga, ca] = a;
            auto& [tb, gb, cb] = b;
            if (ta != tb) return ta < tb;
            if (ga != gb) return ga < gb;
            if (cs[ca].key != cs[cb].key) return cs[ca].key < cs[cb].key;
            return cs[ca].first_slice < cs[cb].first_slice;
        });
        Emission out;
        size_t next = 0;
        for (int t = 0; t <= static_cast<int>(cs[i].em.size()); ++t) {
            while (next < placed.size() && std::get<0>(placed[next]) == t) {
                auto& [tt, gg, ch] = placed[next];
                (void)tt;
                for (auto [o, pad] : cs[ch].em) out.push_back({o, pad + gg});
                ++next;
            }
            if (t < static_cast<int>(cs[i].em.size())) out.push_back(cs[i].em[t]);
        }
        cs[i].em = std::move(out);
        cs[i].key = comp_key(cs[i].em);
    }

    // insert top-level components into the anchored skeleton
    std::vector<std::tuple<int, int, int>> placed;
    for (int i = 0; i < k; ++i) {
        if (cs[i].parent >= 0) continue;
        auto [t, g] = insertion_slot(skel, run.dom_wires, anchored, cs[i].first_slice);
        placed.push_back({t, g, i});
    }
    std::sort(placed.begin(), placed.end(), [&](const auto& a, const auto& b) {
        auto& [ta, ga, ca] = a;
        auto& [tb, gb, cb] = b;
        if (ta != tb) return ta < tb;
        if (ga != gb) return ga < gb;
        if (cs[ca].key != cs[cb].key) return cs[ca].key < cs[cb].key;
        return cs[ca].first_slice < cs[cb].first_slice;
    });
    Emission final_em;
    size_t next = 0;
    for (int t = 0; t <= static_cast<int>(skel.size()); ++t) {
        while (next < placed.size() && std::get<0>(placed[next]) == t) {
            auto& [tt, gg, ch] = placed[next];
            (void)tt;
            for (auto [o, pad] : cs[ch].em) final_em.push_back({o, pad + gg});
            ++next;
        }
        if (t < static_cast<int>(skel.size())) final_em.push_back(skel[t]);
    }

    std::vector<Slice> out;
    for (auto& [o, pad] : final_em) out.push_back(Slice{pad, run.occ[o].box, 0});
    return Diagram(pg_, dom_, std::move(out));
}

bool Diagram::is_canonical() const {
    Diagram c = canonical();
    if (c.slices_.size() != slices_.size()) return false;
    for (size_t i = 0; i < slices_.size(); ++i)
        if (c.slices_[i].left_pad != slices_[i].left_pad ||
            !box_same_shape(c.slices_[i].box, slices_[i].box))
            return false;
    return true;
}

std::string Diagram::key() const {
    Diagram c = canonical();
    std::ostringstream os;
    for (SortId s : c.dom_) os << s << ',';
    os << '|';
    for (const auto& sl : c.slices_) {
        os << sl.left_pad << ':';
        if (sl.box.is_hole()) {
            os << "h[";
            for (SortId s : sl.box.hole_dom) os << s << ',';
            os << '>';
            for (SortId s : sl.box.hole_cod) os << s << ',';
            os << ']';
        } else {
            os << 'g' << sl.box.gen;
        }
        os << ';';
    }
    return os.str();
}

Diagram Diagram::relabel_holes(const std::function<std::string(int, const std::string&)>& f) const {
    std::vector<Slice> out = slices_;
    int idx = 0;
    for (auto& sl : out)
        if (sl.box.is_hole()) {
            sl.box.label = f(idx, sl.box.label);
            ++idx;
        }
    return Diagram(pg_, dom_, std::move(out));
}

Diagram compose(const Diagram& a, const Diagram& b) {
    if (a.polygraph() != b.polygraph()) throw DiagramError("compose across polygraphs");
    if (a.cod() != b.dom())
        throw DiagramError(compose_mismatch_message(*a.polygraph(), a.cod(), b.dom()));
    std::vector<Slice> slices = a.slices();
    slices.insert(slices.end(), b.slices().begin(), b.slices().end());
    return Diagram(a.polygraph(), a.dom(), std::move(slices));
}

Diagram tensor(const Diagram& a, const Diagram& b) {
    if (a.polygraph() != b.polygraph()) throw DiagramError("tensor across polygraphs");
    std::vector<Slice> slices;
    slices.reserve(a.slices().size() + b.slices().size());
    for (auto sl : a.slices()) {
        sl.right_pad += static_cast<int>(b.dom().size());
        slices.push_back(sl);
    }
    const int shift = static_cast<int>(a.cod().size());
    for (auto sl : b.slices()) {
        sl.left_pad += shift;
        slices.push_back(sl);
    }
    Word dom = a.dom();
    dom.insert(dom.end(), b.dom().begin(), b.dom().end());
    return Diagram(a.polygraph(), std::move(dom), std::move(slices));
}

bool equal(const Diagram& a, const Diagram& b) {
    if (a.polygraph() != b.polygraph()) throw DiagramError("equality across polygraphs");
    if (a.dom() != b.dom()) return false;
    return a.key() == b.key();
}

DiagramContext::DiagramContext(Diagram d, std::vector<std::string> order)
    : body_(std::move(d)), order_(std::move(order)) {
    std::set<std::string> seen;
    for (int i : body_.hole_slices()) {
        const auto& lbl = body_.slices()[i].box.label;
        if (lbl.empty()) throw DiagramError("unlabeled hole in context");
        if (!seen.insert(lbl).second)
            throw DiagramError("nonlinear use of hole variable '" + lbl + "'");
    }
    if (seen.size() != order_.size()) throw DiagramError("hole order does not cover the holes");
    for (const auto& lbl : order_)
        if (!seen.count(lbl)) throw DiagramError("hole order names unknown variable '" + lbl + "'");
}

DiagramContext DiagramContext::canonical_order(Diagram d) {
    Diagram c = d.canonical();
    std::vector<std::string> order;
    for (int i : c.hole_slices()) order.push_back(c.slices()[i].box.label);
    return DiagramContext(std::move(c), std::move(order));
}

DiagramContext DiagramContext::declared_order(Diagram d, std::vector<std::string> order) {
    return DiagramContext(std::move(d), std::move(order));
}

std::pair<Word, Word> DiagramContext::hole_interface(const std::string& label) const {
    for (int i : body_.hole_slices()) {
        const auto& b = body_.slices()[i].box;
        if (b.label == label) return {b.hole_dom, b.hole_cod};
    }
    throw DiagramError("unknown hole variable '" + label + "'");
}

std::pair<Word, Word> DiagramContext::hole_interface(int position) const {
    return hole_interface(order_.at(position));
}

DiagramContext DiagramContext::substitute(
    const std::map<std::string, DiagramContext>& assignment) const {
    for (const auto& [var, ctx] : assignment) {
        auto iface = hole_interface(var);  // throws on unknown variable
        if (ctx.body().dom() != iface.first || ctx.body().cod() != iface.second)
            throw DiagramError("substitution interface mismatch at '" + var + "': expected '" +
                               body_.polygraph()->word_name(iface.first) + " -> " +
                               body_.polygraph()->word_name(iface.second) + "'");
        if (ctx.body().polygraph() != body_.polygraph())
            throw DiagramError("substitution across polygraphs");
    }
    std::vector<Slice> out;
    for (const auto& sl : body_.slices()) {
        auto it = sl.box.is_hole() ? assignment.find(sl.box.label) : assignment.end();
        if (it == assignment.end()) {
            out.push_back(sl);
            continue;
        }
        for (auto inner : it->second.body().slices()) {
            inner.left_pad += sl.left_pad;
            inner.right_pad += sl.right_pad;
            out.push_back(inner);
        }
    }
    Diagram d(body_.polygraph(), body_.dom(), std::move(out));
    std::vector<std::string> order;
    for (const auto& lbl : order_) {
        auto it = assignment.find(lbl);
        if (it == assignment.end()) {
            order.push_back(lbl);
        } else {
            for (const auto& inner : it->second.hole_order()) order.push_back(inner);
        }
    }
    return DiagramContext(std::move(d), std::move(order));
}

DiagramContext DiagramContext::permute_holes(const Permutation& sigma) const {
    if (static_cast<int>(sigma.size()) != hole_count())
        throw DiagramError("hole permutation arity mismatch");
    return DiagramContext(body_, apply_permutation(sigma, order_));
}

DiagramContext make_context(const Diagram& d) { return DiagramContext::canonical_order(d); }

bool context_equal(const DiagramContext& a, const DiagramContext& b) {
    if (!equal(a.body(), b.body())) return false;
    if (a.hole_count() != b.hole_count()) return false;
    // hole order matters up to renaming: compare positions in canonical form
    auto positions = [](const DiagramContext& c) {
        Diagram canon = c.body().canonical();
        std::vector<int> pos;  // for each ordered hole, its canonical slice rank
        for (const auto& lbl : c.hole_order()) {
            int rank = 0;
            for (int i : canon.hole_slices()) {
                if (canon.slices()[i].box.label == lbl) {
                    pos.push_back(rank);
                    break;
                }
                ++rank;
            }
        }
        return pos;
    };
    return positions(a) == positions(b);
}

}  // namespace moncat
