#include "p2c/logic.hpp"

#include "p2c/error.hpp"

#include <charconv>
#include <optional>
#include <tuple>

namespace p2c {

namespace {

std::optional<unsigned long long> label_number(const std::string& label) {
    if (label.size() < 2 || label[0] != 'C') return std::nullopt;
    unsigned long long value = 0;
    auto [ptr, ec] = std::from_chars(label.data() + 1, label.data() + label.size(), value);
    if (ec != std::errc{} || ptr != label.data() + label.size()) return std::nullopt;
    return value;
}

}  // namespace

bool LabelLess::operator()(const std::string& a, const std::string& b) const {
    const auto na = label_number(a);
    const auto nb = label_number(b);
    if (na && nb) return std::tie(*na, a) < std::tie(*nb, b);
    if (na != nb) return na.has_value();  // well-formed labels sort first
    return a < b;
}

DiffResult diff(const AtomSet& from, const AtomSet& to, const RefinementSet& refinements) {
    for (const auto& [old_label, new_label] : refinements) {
        if (!from.contains(old_label) || !to.contains(new_label)) {
            throw Error(ErrorCode::InvalidArgument,
                        "refinement (" + old_label + " -> " + new_label + ") requires old in 'from' and new in 'to'");
        }
    }

    DiffResult result;
    for (const auto& label : from) {
        if (!to.contains(label)) result.removed.insert(label);
    }
    for (const auto& label : to) {
        if (!from.contains(label)) result.added.insert(label);
    }
    for (const auto& pair : refinements) {
        const auto& [old_label, new_label] = pair;
        // Each endpoint links at most once; a label present on both sides is not a rename.
        if (result.removed.contains(old_label) && result.added.contains(new_label)) {
            result.removed.erase(old_label);
            result.added.erase(new_label);
            result.renamed.insert(pair);
        }
    }
    result.size = result.added.size() + result.removed.size() + result.renamed.size();
    return result;
}

bool is_superset(const AtomSet& a, const AtomSet& b, bool strict) {
    for (const auto& label : a) {
        if (!b.contains(label)) return false;
    }
    return strict ? b.size() > a.size() : true;
}

}  // namespace p2c
