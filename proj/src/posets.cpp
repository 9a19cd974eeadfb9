#include "opkit/posets.hpp"

#include <algorithm>
#include <bit>

namespace opkit {

IndexSet::IndexSet(unsigned e) : ell(e) {
    if (e + 1 > kMaxIndexSetSize)
        throw InputError("index set too large: |L| = " + std::to_string(e + 1) + " exceeds " +
                         std::to_string(kMaxIndexSetSize));
}

unsigned popcount(Mask m) { return static_cast<unsigned>(std::popcount(m)); }

std::vector<unsigned> mask_indices(Mask m) {
    std::vector<unsigned> out;
    for (unsigned i = 0; m != 0; ++i, m >>= 1)
        if (m & 1u) out.push_back(i);
    return out;
}

Mask mask_of(const std::vector<unsigned>& indices) {
    Mask m = 0;
    for (unsigned i : indices) {
        if (i >= kMaxIndexSetSize) throw InputError("subset index out of range: " + std::to_string(i));
        m |= Mask{1} << i;
    }
    return m;
}

std::string mask_to_string(Mask m) {
    std::string out = "{";
    bool first = true;
    for (unsigned i : mask_indices(m)) {
        if (!first) out += ",";
        out += std::to_string(i);
        first = false;
    }
    return out + "}";
}

AlphaSystem::AlphaSystem(IndexSet ground, std::vector<Mask> members) : ground_(ground), members_(std::move(members)) {
    for (Mask m : members_)
        if (!ground_.contains(m))
            throw InputError("subset " + mask_to_string(m) + " is not contained in L = {0.." +
                             std::to_string(ground_.ell) + "}");
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

AlphaSystem AlphaSystem::from_lists(unsigned ell, const std::vector<std::vector<unsigned>>& lists) {
    std::vector<Mask> m;
    for (const auto& l : lists) m.push_back(mask_of(l));
    return AlphaSystem(IndexSet(ell), std::move(m));
}

bool AlphaSystem::contains(Mask m) const { return std::binary_search(members_.begin(), members_.end(), m); }

void require_decomposition_role(const AlphaSystem& a) {
    if (a.empty()) throw InputError("decomposition system is empty");
    if (a.contains(a.ground().full())) throw InputError("decomposition system must not contain L");
}

void require_dual_role(const AlphaSystem& a) {
    if (a.empty()) throw InputError("dual system is empty");
    if (a.size() == 1 && a.members().front() == 0) throw InputError("dual system must not be {∅}");
}

namespace {

std::vector<bool> membership(const AlphaSystem& a) {
    std::vector<bool> in(a.ground().power_set_size(), false);
    for (Mask m : a.members()) in[m] = true;
    return in;
}

AlphaSystem from_flags(const IndexSet& g, const std::vector<bool>& flags) {
    std::vector<Mask> m;
    for (std::size_t j = 0; j < flags.size(); ++j)
        if (flags[j]) m.push_back(static_cast<Mask>(j));
    return AlphaSystem(g, std::move(m));
}

}  // namespace

AlphaSystem lower_closure(const AlphaSystem& a) {
    std::vector<bool> in(a.ground().power_set_size(), false);
    for (Mask m : a.members())
        for (Mask s = m;; s = (s - 1) & m) {
            in[s] = true;
            if (s == 0) break;
        }
    return from_flags(a.ground(), in);
}

AlphaSystem upper_closure(const AlphaSystem& a) {
    const Mask full = a.ground().full();
    std::vector<bool> in(a.ground().power_set_size(), false);
    for (Mask m : a.members()) {
        const Mask rest = full & ~m;
        for (Mask s = rest;; s = (s - 1) & rest) {
            in[m | s] = true;
            if (s == 0) break;
        }
    }
    return from_flags(a.ground(), in);
}

AlphaSystem minimal_elements(const AlphaSystem& a) {
    // below[j]: some member is a proper subset of j.
    const auto in = membership(a);
    std::vector<bool> below(in.size(), false);
    for (Mask j = 1; j < in.size(); ++j)
        for (unsigned i : mask_indices(j)) {
            const Mask s = j & ~(Mask{1} << i);
            if (in[s] || below[s]) {
                below[j] = true;
                break;
            }
        }
    std::vector<Mask> out;
    for (Mask m : a.members())
        if (!below[m]) out.push_back(m);
    return AlphaSystem(a.ground(), std::move(out));
}

AlphaSystem maximal_elements(const AlphaSystem& a) {
    // above[j]: some member is a proper superset of j.
    const auto in = membership(a);
    const Mask full = a.ground().full();
    std::vector<bool> above(in.size(), false);
    for (Mask j = full;; --j) {
        for (unsigned i : mask_indices(full & ~j)) {
            const Mask s = j | (Mask{1} << i);
            if (in[s] || above[s]) {
                above[j] = true;
                break;
            }
        }
        if (j == 0) break;
    }
    std::vector<Mask> out;
    for (Mask m : a.members())
        if (!above[m]) out.push_back(m);
    return AlphaSystem(a.ground(), std::move(out));
}

Closures closures(const AlphaSystem& a) {
    return {lower_closure(a), upper_closure(a), minimal_elements(a), maximal_elements(a)};
}

AlphaSystem upper_complement_pointwise(const AlphaSystem& a) {
    std::vector<Mask> out;
    for (Mask j = 0; j <= a.ground().full(); ++j)
        if (std::all_of(a.members().begin(), a.members().end(), [&](Mask i) { return (j & ~i) != 0; }))
            out.push_back(j);
    return AlphaSystem(a.ground(), std::move(out));
}

AlphaSystem lower_complement_pointwise(const AlphaSystem& a) {
    std::vector<Mask> out;
    for (Mask j = 0; j <= a.ground().full(); ++j)
        if (std::all_of(a.members().begin(), a.members().end(), [&](Mask i) { return (i & ~j) != 0; }))
            out.push_back(j);
    return AlphaSystem(a.ground(), std::move(out));
}

Complements complements(const AlphaSystem& a) {
    auto lower = membership(lower_closure(a));
    auto upper = membership(upper_closure(a));
    lower.flip();
    upper.flip();
    Complements c{from_flags(a.ground(), lower), from_flags(a.ground(), upper)};
    if (!(c.alpha_u == upper_complement_pointwise(a)) || !(c.alpha_l == lower_complement_pointwise(a)))
        throw MathError("complement definitions disagree");
    return c;
}

OptimalAlpha optimal_alpha(const IndexSet& ground, const UnitOracle& oracle) {
    const std::size_t total = ground.power_set_size();
    std::vector<Mask> order(total);
    for (std::size_t j = 0; j < total; ++j) order[j] = static_cast<Mask>(j);
    std::stable_sort(order.begin(), order.end(), [](Mask a, Mask b) { return popcount(a) < popcount(b); });

    OptimalAlpha out;
    std::vector<signed char> known(total, 0);  // 1 unit, -1 not unit
    for (Mask j : order) {
        bool inferred = false;
        for (unsigned i : mask_indices(j))
            if (known[j & ~(Mask{1} << i)] == 1) {
                inferred = true;
                break;
            }
        if (inferred) {
            known[j] = 1;
            continue;
        }
        ++out.oracle_calls;
        known[j] = oracle(j) ? 1 : -1;
    }

    std::vector<bool> unit(total);
    for (std::size_t j = 0; j < total; ++j) unit[j] = known[j] == 1;
    out.alpha_p = from_flags(ground, unit);
    out.alpha_opt = minimal_elements(out.alpha_p);

    for (Mask m : out.alpha_opt.members())
        for (unsigned i = 0; i < ground.size(); ++i) {
            const Mask up = m | (Mask{1} << i);
            if (up == m) continue;
            ++out.oracle_calls;
            if (!oracle(up))
                throw MathError("oracle violates upward closure: " + mask_to_string(m) + " is a unit set but " +
                                mask_to_string(up) + " is not");
        }

    unit.flip();
    out.beta_opt = maximal_elements(from_flags(ground, unit));
    return out;
}

}  // namespace opkit
