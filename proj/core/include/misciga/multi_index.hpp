#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace misciga {

/// A multi-index is a fixed-length vector of non-negative integers. Within an
/// IndexSet all components are >= 1; zero components only appear transiently
/// inside detail-operator expansions.
using MultiIndex = std::vector<int>;

MultiIndex ones(int size);
MultiIndex unit_step(const MultiIndex& i, int direction, int delta);
int component_sum(const MultiIndex& i);

/// True iff for every member i and every direction with i_k > 1 the backward
/// neighbor i - e_k is also a member.
bool is_downward_closed(const std::set<MultiIndex>& members);

/// A finite downward-closed multi-index set (components >= 1). Construction
/// and mutation validate closure and throw StructureError on violation.
class IndexSet {
public:
    IndexSet() = default;
    explicit IndexSet(std::set<MultiIndex> members);

    static IndexSet single(const MultiIndex& root);

    const std::set<MultiIndex>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }
    bool empty() const { return members_.empty(); }
    bool contains(const MultiIndex& i) const { return members_.count(i) > 0; }
    int dim() const { return members_.empty() ? 0 : static_cast<int>(members_.begin()->size()); }

    /// Inserts a new member; the result must remain downward closed.
    void insert(const MultiIndex& i);

    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    bool operator==(const IndexSet&) const = default;

private:
    std::set<MultiIndex> members_;
};

/// One-step successors of Lambda that are not in Lambda.
std::set<MultiIndex> margin(const IndexSet& lambda);

/// Margin members whose every backward step lands inside Lambda.
std::set<MultiIndex> reduced_margin(const IndexSet& lambda);

/// Serialization: one multi-index per line, components space-separated.
void write_index_set(std::ostream& os, const IndexSet& lambda);
IndexSet read_index_set(std::istream& is);
std::string to_string(const MultiIndex& i);

}  // namespace misciga
