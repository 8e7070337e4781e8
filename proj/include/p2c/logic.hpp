#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace p2c {

/// Constraint label such as "C4". Ordered numerically by the trailing
/// integer, so C2 < C10.
struct LabelLess {
    bool operator()(const std::string& a, const std::string& b) const;
};

using AtomSet = std::set<std::string, LabelLess>;
using LabelPair = std::pair<std::string, std::string>;  // (old, new)
using RefinementSet = std::set<LabelPair>;

enum class DiffMode { Raw, Linked };

struct DiffResult {
    AtomSet added;
    AtomSet removed;
    RefinementSet renamed;
    std::size_t size = 0;
};

/// Symmetric difference of two atom sets. Each refinement pair whose old label
/// is only in `from` and whose new label is only in `to` is counted once as a
/// rename instead of one removal plus one addition. Throws InvalidArgument if a
/// pair has old not in `from` or new not in `to`.
DiffResult diff(const AtomSet& from, const AtomSet& to, const RefinementSet& refinements = {});

/// True iff `b` is a superset of `a`; strict by default.
bool is_superset(const AtomSet& a, const AtomSet& b, bool strict = true);

}  // namespace p2c
