#include "possur/success_region.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "possur/error.hpp"

namespace possur {

SuccessRegion SuccessRegion::leaf(Index endpoint, Direction direction, double delta) {
    SuccessRegion r;
    r.kind_ = Kind::event;
    r.event_ = {endpoint, direction, delta};
    return r;
}

SuccessRegion SuccessRegion::all(std::vector<SuccessRegion> children) {
    SuccessRegion r;
    r.kind_ = Kind::all;
    r.children_ = std::move(children);
    return r;
}

SuccessRegion SuccessRegion::any(std::vector<SuccessRegion> children) {
    SuccessRegion r;
    r.kind_ = Kind::any;
    r.children_ = std::move(children);
    return r;
}

void SuccessRegion::validate(Index J) const {
    if (kind_ == Kind::event) {
        if (event_.endpoint < 0 || event_.endpoint >= J)
            throw ConfigError("success region: endpoint " + std::to_string(event_.endpoint + 1) +
                              " outside 1.." + std::to_string(J));
        if (std::isnan(event_.delta)) throw ConfigError("success region: threshold is NaN");
        return;
    }
    if (children_.empty()) throw ConfigError("success region: empty all/any node");
    for (const auto& c : children_) c.validate(J);
}

bool SuccessRegion::contains(const Eigen::Ref<const Eigen::VectorXd>& effects) const {
    switch (kind_) {
        case Kind::event: return event_.holds(effects(event_.endpoint));
        case Kind::all:
            return std::all_of(children_.begin(), children_.end(),
                               [&](const SuccessRegion& c) { return c.contains(effects); });
        case Kind::any:
            return std::any_of(children_.begin(), children_.end(),
                               [&](const SuccessRegion& c) { return c.contains(effects); });
    }
    return false;
}

namespace {

std::string describe_event(const Event& e) {
    std::ostringstream os;
    os << "b" << (e.endpoint + 1) << (e.direction == Direction::greater ? ">" : "<") << e.delta;
    return os.str();
}

// Axis-aligned open box: lower[j] < beta_j < upper[j].
struct Box {
    std::vector<double> lower, upper;

    explicit Box(Index J)
        : lower(static_cast<std::size_t>(J), -std::numeric_limits<double>::infinity()),
          upper(static_cast<std::size_t>(J), std::numeric_limits<double>::infinity()) {}

    void add(const Event& e) {
        auto j = static_cast<std::size_t>(e.endpoint);
        if (e.direction == Direction::greater) lower[j] = std::max(lower[j], e.delta);
        else upper[j] = std::min(upper[j], e.delta);
    }
    bool empty() const {
        for (std::size_t j = 0; j < lower.size(); ++j)
            if (!(lower[j] < upper[j])) return true;
        return false;
    }
    bool within(const Box& other) const {
        for (std::size_t j = 0; j < lower.size(); ++j)
            if (lower[j] < other.lower[j] || upper[j] > other.upper[j]) return false;
        return true;
    }
    bool operator==(const Box&) const = default;

    Clause clause() const {
        Clause c;
        for (std::size_t j = 0; j < lower.size(); ++j) {
            if (std::isfinite(lower[j])) c.events.push_back({static_cast<Index>(j), Direction::greater, lower[j]});
            if (std::isfinite(upper[j])) c.events.push_back({static_cast<Index>(j), Direction::less, upper[j]});
        }
        return c;
    }
};

Index max_endpoint(const SuccessRegion& r) {
    if (r.kind() == SuccessRegion::Kind::event) return r.event().endpoint;
    Index m = 0;
    for (const auto& c : r.children()) m = std::max(m, max_endpoint(c));
    return m;
}

using RawDnf = std::vector<std::vector<Event>>;

constexpr std::size_t kDistributionLimit = 1u << 16;

RawDnf distribute(const SuccessRegion& r) {
    switch (r.kind()) {
        case SuccessRegion::Kind::event: return {{r.event()}};
        case SuccessRegion::Kind::any: {
            RawDnf out;
            for (const auto& c : r.children()) {
                RawDnf sub = distribute(c);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        case SuccessRegion::Kind::all: {
            RawDnf out{{}};
            for (const auto& c : r.children()) {
                const RawDnf sub = distribute(c);
                if (out.size() * sub.size() > kDistributionLimit)
                    throw ConfigError("success region: disjunctive normal form too large");
                RawDnf next;
                next.reserve(out.size() * sub.size());
                for (const auto& a : out)
                    for (const auto& b : sub) {
                        auto merged = a;
                        merged.insert(merged.end(), b.begin(), b.end());
                        next.push_back(std::move(merged));
                    }
                out = std::move(next);
            }
            return out;
        }
    }
    return {};
}

}  // namespace

std::string SuccessRegion::describe() const {
    if (kind_ == Kind::event) return describe_event(event_);
    std::string out = "(";
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (i) out += kind_ == Kind::all ? " & " : " | ";
        out += children_[i].describe();
    }
    return out + ")";
}

std::uint32_t DnfRegion::satisfied_mask(const Eigen::Ref<const Eigen::VectorXd>& effects) const {
    std::uint32_t mask = 0;
    for (std::size_t k = 0; k < clauses.size(); ++k)
        if (clauses[k].holds(effects)) mask |= std::uint32_t{1} << k;
    return mask;
}

bool DnfRegion::contains(const Eigen::Ref<const Eigen::VectorXd>& effects) const {
    return std::any_of(clauses.begin(), clauses.end(), [&](const Clause& c) { return c.holds(effects); });
}

std::string DnfRegion::describe() const {
    std::string out;
    for (std::size_t k = 0; k < clauses.size(); ++k) {
        if (k) out += " | ";
        if (clauses[k].events.empty()) {
            out += "(all)";
            continue;
        }
        out += "(";
        for (std::size_t e = 0; e < clauses[k].events.size(); ++e) {
            if (e) out += " & ";
            out += describe_event(clauses[k].events[e]);
        }
        out += ")";
    }
    return out;
}

DnfRegion to_dnf(const SuccessRegion& region) {
    const Index J = max_endpoint(region) + 1;
    region.validate(J);
    std::vector<Box> boxes;
    for (const auto& raw : distribute(region)) {
        Box b(J);
        for (const auto& e : raw) b.add(e);
        if (b.empty()) continue;
        if (std::find(boxes.begin(), boxes.end(), b) == boxes.end()) boxes.push_back(std::move(b));
    }
    if (boxes.empty()) throw ConfigError("success region is empty: every clause is contradictory");
    DnfRegion out;
    for (std::size_t a = 0; a < boxes.size(); ++a) {
        bool subsumed = false;
        for (std::size_t b = 0; b < boxes.size() && !subsumed; ++b)
            subsumed = b != a && boxes[a].within(boxes[b]);
        if (!subsumed) out.clauses.push_back(boxes[a].clause());
    }
    return out;
}

double region_probability(const Eigen::MatrixXd& effects, const DnfRegion& region) {
    if (effects.rows() == 0) throw Error("region probability of an empty draw set");
    Index hits = 0;
    for (Index i = 0; i < effects.rows(); ++i)
        if (region.contains(effects.row(i).transpose())) ++hits;
    return static_cast<double>(hits) / static_cast<double>(effects.rows());
}

double region_probability(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                          const DnfRegion& region) {
    if (draws.empty()) throw Error("region probability of an empty draw set");
    Index hits = 0;
    for (const auto& d : draws)
        if (region.contains(treatment_effects(design, d.beta))) ++hits;
    return static_cast<double>(hits) / static_cast<double>(draws.size());
}

std::vector<std::uint64_t> intersection_counts(const std::vector<std::uint64_t>& mask_counts, Index K) {
    const std::size_t size = std::size_t{1} << K;
    if (mask_counts.size() != size) throw Error("mask histogram has the wrong size");
    std::vector<std::uint64_t> out = mask_counts;
    // Superset-sum transform.
    for (Index bit = 0; bit < K; ++bit)
        for (std::size_t m = 0; m < size; ++m)
            if (!(m & (std::size_t{1} << bit))) out[m] += out[m | (std::size_t{1} << bit)];
    return out;
}

double adjusted_pos(const std::vector<double>& subset_pos, Index K, double gamma) {
    if (K < 1) throw ConfigError("adjusted POS needs at least one clause");
    if (K > kMaxClauses) throw ConfigError("intersection enumeration too large");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
    const std::size_t size = std::size_t{1} << K;
    if (subset_pos.size() != size) throw Error("subset POS vector has the wrong size");
    const double alpha = 1.0 - gamma;
    // sum_I (-1)^{|I|-1} max{alpha, v_I} = alpha + sum_I (-1)^{|I|-1} max{0, v_I - alpha},
    // since the alternating count over nonempty subsets is 1.
    double excess = 0.0;
    for (std::size_t m = 1; m < size; ++m) {
        const double v = subset_pos[m];
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("subset POS outside [0,1]");
        const double term = std::max(0.0, v - alpha);
        excess += (std::popcount(m) % 2 == 1) ? term : -term;
    }
    return std::clamp(alpha + excess, 0.0, 1.0);
}

double adjusted_pos(const std::map<std::uint32_t, double>& clause_pos, Index K, double gamma) {
    if (K < 1) throw ConfigError("adjusted POS needs at least one clause");
    if (K > kMaxClauses) throw ConfigError("intersection enumeration too large");
    const std::size_t size = std::size_t{1} << K;
    std::vector<double> dense(size, 0.0);
    for (std::size_t m = 1; m < size; ++m) {
        const auto it = clause_pos.find(static_cast<std::uint32_t>(m));
        if (it == clause_pos.end())
            throw ConfigError("adjusted POS: missing value for clause subset " + std::to_string(m));
        dense[m] = it->second;
    }
    return adjusted_pos(dense, K, gamma);
}

}  // namespace possur
