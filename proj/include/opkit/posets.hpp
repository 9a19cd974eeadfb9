#pragma once

// Systems of subsets of the index set L = {0, ..., ell}, encoded as bitmasks.

#include "opkit/errors.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace opkit {

using Mask = std::uint32_t;

inline constexpr unsigned kMaxIndexSetSize = 20;

struct IndexSet {
    unsigned ell = 0;

    IndexSet() = default;
    explicit IndexSet(unsigned e);

    unsigned size() const { return ell + 1; }
    Mask full() const { return static_cast<Mask>((1u << size()) - 1u); }
    std::size_t power_set_size() const { return std::size_t{1} << size(); }
    bool contains(Mask m) const { return (m & ~full()) == 0; }
};

inline bool operator==(const IndexSet& a, const IndexSet& b) { return a.ell == b.ell; }

unsigned popcount(Mask m);
std::vector<unsigned> mask_indices(Mask m);
Mask mask_of(const std::vector<unsigned>& indices);
inline bool is_subset(Mask a, Mask b) { return (a & ~b) == 0; }
std::string mask_to_string(Mask m);

class AlphaSystem {
public:
    AlphaSystem() = default;
    AlphaSystem(IndexSet ground, std::vector<Mask> members);

    static AlphaSystem from_lists(unsigned ell, const std::vector<std::vector<unsigned>>& lists);

    const IndexSet& ground() const { return ground_; }
    // Sorted ascending, no duplicates.
    const std::vector<Mask>& members() const { return members_; }
    bool empty() const { return members_.empty(); }
    std::size_t size() const { return members_.size(); }
    bool contains(Mask m) const;

    friend bool operator==(const AlphaSystem& a, const AlphaSystem& b) {
        return a.ground_ == b.ground_ && a.members_ == b.members_;
    }

private:
    IndexSet ground_;
    std::vector<Mask> members_;
};

// Role checks. A decomposition system must not contain L; a dual system must
// not be {∅}.
void require_decomposition_role(const AlphaSystem& a);
void require_dual_role(const AlphaSystem& a);

AlphaSystem lower_closure(const AlphaSystem& a);  // 𝓛(α)
AlphaSystem upper_closure(const AlphaSystem& a);  // 𝓤(α)
AlphaSystem minimal_elements(const AlphaSystem& a);
AlphaSystem maximal_elements(const AlphaSystem& a);

struct Closures {
    AlphaSystem lower, upper, mins, maxs;
};
Closures closures(const AlphaSystem& a);

// α^u = {J : J \ I ≠ ∅ for all I ∈ α}, α^l = {J : I \ J ≠ ∅ for all I ∈ α},
// computed pointwise.
AlphaSystem upper_complement_pointwise(const AlphaSystem& a);
AlphaSystem lower_complement_pointwise(const AlphaSystem& a);

struct Complements {
    AlphaSystem alpha_u, alpha_l;
};
// Set-difference form (2^L \ 𝓛(α), 2^L \ 𝓤(α)), cross-checked against the
// pointwise form; a disagreement throws MathError.
Complements complements(const AlphaSystem& a);

using UnitOracle = std::function<bool(Mask)>;

struct OptimalAlpha {
    AlphaSystem alpha_opt;  // Min(α_P)
    AlphaSystem beta_opt;   // Max((α_P)^l)
    AlphaSystem alpha_p;    // every J with oracle(J) true
    std::size_t oracle_calls = 0;
};

// Enumerates 2^L in order of increasing size, calling the oracle only on sets
// none of whose immediate subsets is already known to be a unit set. Sets
// inferred by monotonicity are audited on the immediate supersets of each
// minimal unit set; an audit failure throws MathError.
OptimalAlpha optimal_alpha(const IndexSet& ground, const UnitOracle& oracle);

}  // namespace opkit
