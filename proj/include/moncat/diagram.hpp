#ifndef MONCAT_DIAGRAM_HPP
#define MONCAT_DIAGRAM_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moncat/signature.hpp"

namespace moncat {

class DiagramError : public std::runtime_error {
public:
    explicit DiagramError(const std::string& msg) : std::runtime_error(msg) {}
};

/// The payload of a slice: a generator of the polygraph, or a labeled hole
/// h_{A,B} from the extended polygraph of diagram contexts.
struct Box {
    GenId gen = -1;  // >= 0 for generators
    Word hole_dom, hole_cod;
    std::string label;  // hole variable; empty for generators

    bool is_hole() const { return gen < 0; }

    static Box generator(GenId g) { return Box{g, {}, {}, {}}; }
    static Box hole(Word dom, Word cod, std::string label) {
        return Box{-1, std::move(dom), std::move(cod), std::move(label)};
    }
};

// box identity for diagram equality: hole labels are alpha-renamable
bool box_same_shape(const Box& a, const Box& b);
// strict-weak order on shapes, used for canonical tie-breaking
bool box_shape_less(const Box& a, const Box& b);

/// One layer id_{leftPad} (x) box (x) id_{rightPad} against the running frontier.
struct Slice {
    int left_pad = 0;
    Box box;
    int right_pad = 0;
};

/// A morphism of the free strict monoidal category over a polygraph, stored
/// as a slice list. Immutable after construction; operations return fresh
/// values. Slices may contain hole boxes; hole-free diagrams are the plain
/// morphisms, diagrams with holes underlie DiagramContext.
class Diagram {
public:
    Diagram(PolygraphPtr pg, Word dom, std::vector<Slice> slices);

    static Diagram identity(PolygraphPtr pg, Word w);
    static Diagram of_generator(PolygraphPtr pg, GenId g);
    static Diagram of_hole(PolygraphPtr pg, Word dom, Word cod, std::string label);

    const PolygraphPtr& polygraph() const { return pg_; }
    const Word& dom() const { return dom_; }
    const Word& cod() const { return cod_; }
    const std::vector<Slice>& slices() const { return slices_; }

    /// Number of generator occurrences (holes not counted).
    int gen_count() const;
    int hole_count() const;
    /// Indices of hole slices in list order.
    std::vector<int> hole_slices() const;

    /// The frontier word before slice t (t = size() gives the codomain).
    Word frontier(int t) const;

    Diagram canonical() const;
    bool is_canonical() const;

    /// Deterministic key of the canonical form; equal iff diagrams are equal
    /// as free-monoidal-category morphisms (hole labels ignored).
    std::string key() const;

    /// Swap slices k and k+1 when their supports admit an interchange.
    std::optional<Diagram> try_swap(int k) const;

    /// Relabel the hole at slice index according to f.
    Diagram relabel_holes(const std::function<std::string(int, const std::string&)>& f) const;

private:
    PolygraphPtr pg_;
    Word dom_, cod_;
    std::vector<Slice> slices_;

    void refresh();  // validates and fills right pads / codomain
    int in_width(const Box& b) const;
    int out_width(const Box& b) const;
    friend class DiagramBuilder;
};

Diagram compose(const Diagram& a, const Diagram& b);
Diagram tensor(const Diagram& a, const Diagram& b);
bool equal(const Diagram& a, const Diagram& b);

/// A diagram with linear, labeled holes and an explicit hole order.
class DiagramContext {
public:
    /// Hole order = left-to-right first appearance in the canonical form.
    static DiagramContext canonical_order(Diagram d);
    /// Hole order as given (used for grammar rules with declared order).
    static DiagramContext declared_order(Diagram d, std::vector<std::string> order);

    const Diagram& body() const { return body_; }
    const std::vector<std::string>& hole_order() const { return order_; }
    int hole_count() const { return static_cast<int>(order_.size()); }

    /// Interface of the named hole.
    std::pair<Word, Word> hole_interface(const std::string& label) const;
    std::pair<Word, Word> hole_interface(int position) const;

    DiagramContext substitute(const std::map<std::string, DiagramContext>& assignment) const;
    DiagramContext permute_holes(const Permutation& sigma) const;

    bool closed() const { return order_.empty(); }

private:
    DiagramContext(Diagram d, std::vector<std::string> order);
    Diagram body_;
    std::vector<std::string> order_;
};

DiagramContext make_context(const Diagram& d);
bool context_equal(const DiagramContext& a, const DiagramContext& b);

}  // namespace moncat

#endif
