#pragma once

// Success regions over treatment effects: expression trees of strict
// one-sided events, their disjunctive normal form, and the adjusted POS
// combination over clause intersections.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "possur/dataset.hpp"
#include "possur/sur_core.hpp"

namespace possur {

/// {beta_1j > delta} or {beta_1j < delta}; endpoint is 0-based. delta may be
/// +-inf to express always/never events.
struct Event {
    Index endpoint = 0;
    Direction direction = Direction::greater;
    double delta = 0.0;

    bool holds(double effect) const {
        return direction == Direction::greater ? effect > delta : effect < delta;
    }
    bool operator==(const Event&) const = default;
};

class SuccessRegion {
  public:
    enum class Kind { event, all, any };

    static SuccessRegion leaf(Index endpoint, Direction direction, double delta);
    static SuccessRegion all(std::vector<SuccessRegion> children);
    static SuccessRegion any(std::vector<SuccessRegion> children);

    Kind kind() const { return kind_; }
    const Event& event() const { return event_; }
    const std::vector<SuccessRegion>& children() const { return children_; }

    /// Throws ConfigError on endpoints outside [0, J) or empty AND/OR nodes.
    void validate(Index J) const;
    /// Direct evaluation of the tree on a treatment-effect vector.
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& effects) const;
    std::string describe() const;

  private:
    Kind kind_ = Kind::event;
    Event event_;
    std::vector<SuccessRegion> children_;
};

/// Intersection of events, at most one lower and one upper bound per endpoint,
/// sorted by endpoint. No events means the full space.
struct Clause {
    std::vector<Event> events;

    bool holds(const Eigen::Ref<const Eigen::VectorXd>& effects) const {
        for (const auto& e : events)
            if (!e.holds(effects(e.endpoint))) return false;
        return true;
    }
    bool operator==(const Clause&) const = default;
};

inline constexpr Index kMaxClauses = 20;

struct DnfRegion {
    std::vector<Clause> clauses;

    Index K() const { return static_cast<Index>(clauses.size()); }
    /// Bit k set iff clause k holds. Requires K <= 32.
    std::uint32_t satisfied_mask(const Eigen::Ref<const Eigen::VectorXd>& effects) const;
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& effects) const;
    std::string describe() const;
};

/// Equivalent DNF with contradictory clauses dropped, then duplicates and
/// subsumed clauses removed (first occurrence kept). Throws ConfigError if
/// the region is empty.
DnfRegion to_dnf(const SuccessRegion& region);

/// Fraction of rows (N x J treatment effects) inside the region.
double region_probability(const Eigen::MatrixXd& effects, const DnfRegion& region);
/// Fraction of draws whose treatment effects lie inside the region.
double region_probability(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                          const DnfRegion& region);

/// From counts of exact satisfied-clause masks (size 2^K), the number of
/// items satisfying every clause of each subset I (indexed by mask).
std::vector<std::uint64_t> intersection_counts(const std::vector<std::uint64_t>& mask_counts, Index K);

/// sum_{k} (-1)^{k-1} sum_{|I|=k} max{1 - gamma, POS(E_I)}, clamped to [0,1].
/// `clause_pos` must hold every nonempty subset of the K clauses, keyed by
/// bitmask.
double adjusted_pos(const std::map<std::uint32_t, double>& clause_pos, Index K, double gamma);

/// Same, with subset values indexed by mask in a dense vector (entry 0 unused).
double adjusted_pos(const std::vector<double>& subset_pos, Index K, double gamma);

}  // namespace possur
