#ifndef MONCAT_SIGNATURE_HPP
#define MONCAT_SIGNATURE_HPP

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace moncat {

using SortId = int;
using GenId = int;
using OpId = int;

/// A word of sorts: an object of the free strict monoidal category.
using Word = std::vector<SortId>;

struct ValidationError {
    std::string what;
};

struct ValidationReport {
    std::vector<ValidationError> errors;
    bool ok() const { return errors.empty(); }
    std::string to_string() const;
};

class SignatureError : public std::runtime_error {
public:
    explicit SignatureError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Doctrine { Free, Cartesian, Hypergraph };

/// Role of a generator injected by a doctrine; None means user-declared.
enum class Structural { None, Swap, Copy, Del, Mu, Eta, Delta, Eps };

struct Generator {
    std::string name;
    Word arity;
    Word coarity;
    Structural structural = Structural::None;
    // for Swap: the two sorts; for the rest: the single carrier sort
    SortId s0 = -1, s1 = -1;
};

/// A signature of generators with word-shaped interfaces. Doctrine-tagged
/// polygraphs carry their structural generators as ordinary entries, flagged
/// so that normal forms and printers can recognize them.
class Polygraph {
public:
    std::string name;
    Doctrine doctrine = Doctrine::Free;

    SortId add_sort(const std::string& s);
    GenId add_gen(const std::string& n, Word arity, Word coarity);

    std::optional<SortId> sort(const std::string& s) const;
    std::optional<GenId> gen(const std::string& n) const;

    const std::string& sort_name(SortId s) const { return sorts_[s]; }
    const Generator& generator(GenId g) const { return gens_[g]; }
    int sort_count() const { return static_cast<int>(sorts_.size()); }
    int gen_count() const { return static_cast<int>(gens_.size()); }

    std::string word_name(const Word& w) const;

    /// Injects swap/copy/del (cartesian) or swap/mu/eta/delta/eps (hypergraph)
    /// for the sorts declared so far. Idempotent.
    void inject_structural();

    GenId swap_gen(SortId a, SortId b) const;
    GenId structural_gen(Structural k, SortId a) const;

    ValidationReport validate() const;

private:
    std::vector<std::string> sorts_;
    std::vector<Generator> gens_;
};

using PolygraphPtr = std::shared_ptr<const Polygraph>;

std::string compose_mismatch_message(const Polygraph& pg, const Word& cod, const Word& dom);

/// Sort- and generator-maps between polygraphs; interfaces must be preserved.
struct PolygraphMorphism {
    PolygraphPtr source;
    PolygraphPtr target;
    std::vector<SortId> sort_map;  // indexed by source sort
    std::vector<GenId> gen_map;    // indexed by source generator

    Word map_word(const Word& w) const;
    ValidationReport validate() const;
};

PolygraphMorphism identity_morphism(const PolygraphPtr& pg);
PolygraphMorphism compose(const PolygraphMorphism& f, const PolygraphMorphism& g);
bool morphism_equal(const PolygraphMorphism& f, const PolygraphMorphism& g);

struct Operation {
    std::string name;
    Word inputs;
    SortId output;
};

/// A signature of tree-shaped operations (list of input sorts, one output).
class Multigraph {
public:
    std::string name;

    SortId add_sort(const std::string& s);
    OpId add_op(const std::string& n, Word inputs, SortId output);

    std::optional<SortId> sort(const std::string& s) const;
    std::optional<OpId> op(const std::string& n) const;

    const std::string& sort_name(SortId s) const { return sorts_[s]; }
    const Operation& operation(OpId o) const { return ops_[o]; }
    int sort_count() const { return static_cast<int>(sorts_.size()); }
    int op_count() const { return static_cast<int>(ops_.size()); }

    ValidationReport validate() const;

private:
    std::vector<std::string> sorts_;
    std::vector<Operation> ops_;
};

struct MultigraphMorphism {
    const Multigraph* source = nullptr;
    const Multigraph* target = nullptr;
    std::vector<SortId> sort_map;
    std::vector<OpId> op_map;
    ValidationReport validate() const;
};

/// perm[i] is the preimage position: applying perm to a list xs gives
/// ys with ys[i] = xs[perm[i]].
using Permutation = std::vector<int>;

Permutation identity_permutation(int n);
Permutation compose(const Permutation& sigma, const Permutation& tau);
Permutation inverse(const Permutation& p);
std::vector<Permutation> all_permutations(int n);

template <typename T>
std::vector<T> apply_permutation(const Permutation& p, const std::vector<T>& xs) {
    std::vector<T> out;
    out.reserve(xs.size());
    for (int i : p) out.push_back(xs[i]);
    return out;
}

/// An element of clique(M): a representative operation with a permutation of
/// its inputs. Orbits are kept lazy; materialize() is for test-scale n.
struct SymElement {
    OpId op;
    Permutation perm;

    bool operator==(const SymElement& o) const { return op == o.op && perm == o.perm; }
};

class SymmetricMultigraph {
public:
    explicit SymmetricMultigraph(Multigraph base) : base_(std::move(base)) {}

    const Multigraph& base() const { return base_; }

    Word inputs_of(const SymElement& e) const;
    SortId output_of(const SymElement& e) const { return base_.operation(e.op).output; }

    /// The action sigma^*: inputs get reindexed by sigma.
    SymElement act(const Permutation& sigma, const SymElement& e) const;

    /// All n! elements of the orbit of op (n = input count).
    std::vector<SymElement> orbit(OpId op) const;

private:
    Multigraph base_;
};

ValidationReport validate_polygraph(const Polygraph& p);
SymmetricMultigraph clique(const Multigraph& m);
Multigraph representative(const SymmetricMultigraph& s);

}  // namespace moncat

#endif
